#include "agentool/rl_math.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace agentool {

void GrpoConfig::validate() const {
    if (!(delta > 0)) throw std::invalid_argument("grpo.delta must be positive");
    if (!(clip_low > 0 && clip_low <= clip_high && clip_high < 1))
        throw std::invalid_argument("grpo clip range must satisfy 0 < clip_low <= clip_high < 1");
    if (group_size < 2) throw std::invalid_argument("grpo.group_size must be >= 2");
}

std::vector<double> group_advantages(const std::vector<double>& rewards, double delta) {
    if (rewards.size() < 2) throw std::invalid_argument("group advantages need at least 2 rewards");
    if (!(delta >= 0)) throw std::invalid_argument("delta must be >= 0");
    for (double r : rewards)
        if (!std::isfinite(r)) throw std::invalid_argument("reward is not finite");
    const double n = static_cast<double>(rewards.size());
    double mean = 0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double denom = std::sqrt(var / n) + delta;

    std::vector<double> out(rewards.size(), 0.0);
    if (denom == 0) return out;  // equal rewards with delta = 0
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / denom;
    return out;
}

namespace {

void check_logps(const LinearizedSequence& seq, bool need_old) {
    seq.check_shape();
    if (!seq.logp_new || (need_old && !seq.logp_old))
        throw std::invalid_argument(need_old ? "sequence needs logp_new and logp_old" : "sequence needs logp_new");
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
        if (!std::isfinite((*seq.logp_new)[i]) || (need_old && !std::isfinite((*seq.logp_old)[i])))
            throw std::invalid_argument("non-finite log-probability at token " + std::to_string(i));
    }
}

double clip(double r, const GrpoConfig& cfg) { return std::clamp(r, 1 - cfg.clip_low, 1 + cfg.clip_high); }

// Per-token variant: mean over masked tokens of the clipped token term.
double per_token_term(const LinearizedSequence& seq, double advantage, const GrpoConfig& cfg) {
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
        if (!seq.mask[i]) continue;
        sum += clipped_term(std::exp((*seq.logp_new)[i] - (*seq.logp_old)[i]), advantage, cfg);
        ++n;
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace

double masked_ratio(const LinearizedSequence& seq) {
    check_logps(seq, true);
    double log_ratio = 0;
    for (std::size_t i = 0; i < seq.tokens.size(); ++i)
        if (seq.mask[i]) log_ratio += (*seq.logp_new)[i] - (*seq.logp_old)[i];
    return std::exp(log_ratio);
}

double clipped_term(double ratio, double advantage, const GrpoConfig& cfg) {
    return std::min(ratio * advantage, clip(ratio, cfg) * advantage);
}

double clipped_surrogate(const std::vector<double>& ratios, const std::vector<double>& advantages,
                         const GrpoConfig& cfg) {
    if (ratios.size() != advantages.size() || ratios.empty())
        throw std::invalid_argument("surrogate needs one ratio per advantage");
    double sum = 0;
    for (std::size_t g = 0; g < ratios.size(); ++g) sum += clipped_term(ratios[g], advantages[g], cfg);
    return sum / static_cast<double>(ratios.size());
}

double clipped_surrogate(const Group& group, const std::vector<double>& advantages, const GrpoConfig& cfg) {
    if (group.sequences.size() != advantages.size() || advantages.empty())
        throw std::invalid_argument("surrogate needs one sequence per advantage");
    if (cfg.ratio_mode == RatioMode::Sequence) {
        std::vector<double> ratios;
        for (const auto& s : group.sequences) ratios.push_back(masked_ratio(s));
        return clipped_surrogate(ratios, advantages, cfg);
    }
    double sum = 0;
    for (std::size_t g = 0; g < advantages.size(); ++g) {
        check_logps(group.sequences[g], true);
        sum += per_token_term(group.sequences[g], advantages[g], cfg);
    }
    return sum / static_cast<double>(advantages.size());
}

double masked_sft_nll(const LinearizedSequence& seq) {
    check_logps(seq, false);
    double nll = 0;
    for (std::size_t i = 0; i < seq.tokens.size(); ++i)
        if (seq.mask[i]) nll -= (*seq.logp_new)[i];
    return nll;
}

GroupScore score_group(const Group& group, const GrpoConfig& cfg) {
    if (group.rewards.size() != group.sequences.size())
        throw std::invalid_argument("group has " + std::to_string(group.rewards.size()) + " rewards but " +
                                    std::to_string(group.sequences.size()) + " sequences");
    GroupScore s;
    s.advantages = group_advantages(group.rewards, cfg.delta);
    for (const auto& seq : group.sequences) s.ratios.push_back(masked_ratio(seq));
    s.surrogate = cfg.ratio_mode == RatioMode::Sequence ? clipped_surrogate(s.ratios, s.advantages, cfg)
                                                        : clipped_surrogate(group, s.advantages, cfg);
    return s;
}

std::vector<GroupScore> score_groups_serial(const std::vector<Group>& groups, const GrpoConfig& cfg) {
    std::vector<GroupScore> out;
    out.reserve(groups.size());
    for (const auto& g : groups) out.push_back(score_group(g, cfg));
    return out;
}

std::vector<GroupScore> score_groups(const std::vector<Group>& groups, const GrpoConfig& cfg) {
    std::vector<GroupScore> out(groups.size());
    std::vector<std::string> errors(groups.size());
    const auto n = static_cast<std::ptrdiff_t>(groups.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[i] = score_group(groups[i], cfg);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty()) throw std::invalid_argument("group " + std::to_string(i) + ": " + errors[i]);
    return out;
}

}  // namespace agentool
