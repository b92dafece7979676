#include "agentool/tools/prompts.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "embedded_prompts.hpp"

namespace agentool {

PromptSet PromptSet::builtin() {
    namespace e = embedded_prompts;
    return PromptSet{
        std::string(e::manager),
        std::string(e::standard_reasoner),
        std::string(e::critical_reviewer),
        std::string(e::code_reasoner),
        std::string(e::knowledge_searcher),
        std::string(e::final_answer),
        std::string(e::termination),
    };
}

namespace {

void maybe_load(const std::filesystem::path& dir, const char* name, std::string& slot) {
    const auto file = dir / (std::string(name) + ".txt");
    if (!std::filesystem::exists(file)) return;
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read prompt " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    slot = buf.str();
}

}  // namespace

PromptSet PromptSet::load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw std::runtime_error("prompt directory not found: " + dir.string());
    PromptSet p = builtin();
    maybe_load(dir, "manager", p.manager);
    maybe_load(dir, "standard_reasoner", p.standard_reasoner);
    maybe_load(dir, "critical_reviewer", p.critical_reviewer);
    maybe_load(dir, "code_reasoner", p.code_reasoner);
    maybe_load(dir, "knowledge_searcher", p.knowledge_searcher);
    maybe_load(dir, "final_answer", p.final_answer);
    maybe_load(dir, "termination", p.termination_instruction);
    return p;
}

}  // namespace agentool
