#ifndef CKTX_CAUSAL_ESTIMATOR_HPP
#define CKTX_CAUSAL_ESTIMATOR_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cktx/recovery_discovery.hpp"

namespace cktx {

// Recovery experiences grouped by collision context, ready for effect
// estimation. Truncated records are excluded up front when requested.
class EffectDataset {
public:
    explicit EffectDataset(std::vector<RAExperience> records, bool exclude_truncated = true);

    const std::vector<RAExperience>& records() const { return records_; }
    const std::map<CollisionContext, std::vector<size_t>>& by_context() const {
        return by_context_;
    }
    bool empty() const { return records_.empty(); }

private:
    std::vector<RAExperience> records_;
    std::map<CollisionContext, std::vector<size_t>> by_context_;
};

struct ForestParams {
    int n_estimators = 200;
    int min_samples_leaf = 10;
    double alpha = 1.0; // L2 regularization of the propensity model
    int cv = 3;
    int max_iter = 500; // iteration cap for the propensity fit
    std::uint64_t seed = 0;
};

struct EstimatorConfig {
    enum class Backend { StratifiedMean, DoublyRobustForest };
    Backend backend = Backend::StratifiedMean;
    int min_samples_per_arm = 10;
    double shrinkage_weight = 0.0;
    std::optional<ForestParams> forest_params; // present iff DoublyRobustForest

    void validate() const;
};

struct LookupEntry {
    RecoveryMacro macro;
    double estimated_effect = 0.0; // expected residual path length, lower is better
    int support = 0;
};

struct ModelProvenance {
    std::string scenario_id;
    std::string teacher_goal_id;
    std::string fit_id;      // deterministic run identifier, not wall-clock
    std::string config_hash;
};

// The transferred artifact: per collision context, the recovery macro with
// the lowest estimated expected residual path length.
struct LookupModel {
    std::map<CollisionContext, LookupEntry> entries;
    ModelProvenance provenance;
    std::string warning; // set when every context was under-supported

    // Versioned CSV, the teacher->learner wire format.
    std::string serialize() const;
    static LookupModel deserialize(const std::string& csv);
};

// Fits the lookup model: for every context with at least one macro arm of
// min_samples_per_arm records, stores the arm with minimal estimated expected
// residual path length. Ties prefer the shorter macro, then the
// lexicographically smaller action string.
LookupModel fit(const EffectDataset& dataset, const EstimatorConfig& config,
                const ModelProvenance& provenance = {});

// Point estimate for one (context, macro) pair; fit() ranks arms by exactly
// this value. StratifiedMean: the within-context mean of residual path
// lengths after linear prior-path residualization, shrunk toward the arm's
// global mean with weight shrinkage_weight / (shrinkage_weight + n), floored
// at the macro's own length. DoublyRobustForest: cross-fitted AIPW estimate
// with an honest regression forest outcome model, same floor.
double estimate_effect(const EffectDataset& dataset, const CollisionContext& context,
                       const RecoveryMacro& macro, const EstimatorConfig& config);

// Exact-match lookup; absent context means the caller falls back.
std::optional<RecoveryMacro> query(const LookupModel& model, const CollisionContext& context);

} // namespace cktx

#endif
