#pragma once

#include <vector>

#include "agentool/protocol/types.hpp"

namespace agentool {

enum class RatioMode {
    Sequence,  // one masked ratio per trajectory
    PerToken,  // clip each masked token's ratio, then average the token terms
};

struct GrpoConfig {
    double delta = 1e-4;
    double clip_low = 0.2;
    double clip_high = 0.28;
    int group_size = 8;
    RatioMode ratio_mode = RatioMode::Sequence;

    /// Throws std::invalid_argument unless 0 < clip_low <= clip_high < 1,
    /// delta > 0 and group_size >= 2.
    void validate() const;
};

struct Group {
    std::vector<double> rewards;
    std::vector<LinearizedSequence> sequences;
};

/// (R_g - mean) / (population std + delta). Needs at least two rewards.
std::vector<double> group_advantages(const std::vector<double>& rewards, double delta);

/// exp(sum over masked tokens of logp_new - logp_old). Throws
/// std::invalid_argument when a log-prob is missing, non-finite or the
/// shapes disagree.
double masked_ratio(const LinearizedSequence& seq);

/// min(r A, clip(r, 1 - clip_low, 1 + clip_high) A) for one trajectory.
double clipped_term(double ratio, double advantage, const GrpoConfig& cfg);

/// Mean clipped term over the group, with ratios taken from the sequences.
double clipped_surrogate(const Group& group, const std::vector<double>& advantages, const GrpoConfig& cfg);
/// Same objective from precomputed sequence-level ratios.
double clipped_surrogate(const std::vector<double>& ratios, const std::vector<double>& advantages,
                         const GrpoConfig& cfg);

/// -sum over masked tokens of logp_new.
double masked_sft_nll(const LinearizedSequence& seq);

struct GroupScore {
    std::vector<double> advantages;
    /// Sequence-level ratios (reported in both modes).
    std::vector<double> ratios;
    double surrogate = 0;
};

GroupScore score_group(const Group& group, const GrpoConfig& cfg);

/// Batch of groups; the OpenMP version parallelizes over groups and returns
/// the same values as the serial one.
std::vector<GroupScore> score_groups(const std::vector<Group>& groups, const GrpoConfig& cfg);
std::vector<GroupScore> score_groups_serial(const std::vector<Group>& groups, const GrpoConfig& cfg);

}  // namespace agentool
