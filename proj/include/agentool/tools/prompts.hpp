#pragma once

#include <filesystem>
#include <string>

namespace agentool {

/// System prompts for the manager and every model-backed tool.
struct PromptSet {
    std::string manager;
    std::string standard_reasoner;
    std::string critical_reviewer;
    std::string code_reasoner;
    std::string knowledge_searcher;
    std::string final_answer;
    /// c_end, appended to the summarizer request at termination.
    std::string termination_instruction;

    /// The prompts shipped under assets/prompts, compiled in.
    static PromptSet builtin();

    /// Built-in prompts with any `<name>.txt` found in `dir` taking precedence.
    /// Throws std::runtime_error if `dir` is not a directory.
    static PromptSet load(const std::filesystem::path& dir);
};

}  // namespace agentool
