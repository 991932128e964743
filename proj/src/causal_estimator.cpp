#include "cktx/causal_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "cktx/rng.hpp"

namespace cktx {

EffectDataset::EffectDataset(std::vector<RAExperience> records, bool exclude_truncated) {
    records_.reserve(records.size());
    for (auto& r : records) {
        if (exclude_truncated && r.terminal == RATerminal::Truncated) continue;
        records_.push_back(std::move(r));
    }
    for (size_t i = 0; i < records_.size(); ++i) {
        by_context_[records_[i].context].push_back(i);
    }
}

void EstimatorConfig::validate() const {
    if (min_samples_per_arm < 1) {
        throw std::invalid_argument("min_samples_per_arm must be >= 1");
    }
    if (shrinkage_weight < 0.0) {
        throw std::invalid_argument("shrinkage_weight must be >= 0");
    }
    const bool forest = backend == Backend::DoublyRobustForest;
    if (forest != forest_params.has_value()) {
        throw std::invalid_argument(
            "forest_params must be present exactly when backend is DoublyRobustForest");
    }
    if (forest_params) {
        if (forest_params->n_estimators < 1 || forest_params->min_samples_leaf < 1 ||
            forest_params->cv < 1 || forest_params->max_iter < 1 ||
            forest_params->alpha < 0.0) {
            throw std::invalid_argument("invalid forest_params");
        }
    }
}

namespace {

constexpr double kVarianceEps = 1e-12;

// Outcomes after within-context linear residualization of prior_path_length.
// The slope is fit on the context's pooled records; contexts with constant
// prior keep their raw outcomes.
struct AdjustedOutcomes {
    std::vector<double> values; // parallel to dataset.records()
};

AdjustedOutcomes adjust_for_prior(const EffectDataset& dataset) {
    AdjustedOutcomes adjusted;
    adjusted.values.resize(dataset.records().size(), 0.0);
    for (const auto& [context, indices] : dataset.by_context()) {
        double mean_w = 0.0;
        double mean_y = 0.0;
        for (size_t i : indices) {
            mean_w += dataset.records()[i].prior_path_length;
            mean_y += dataset.records()[i].residual_path_length;
        }
        mean_w /= static_cast<double>(indices.size());
        mean_y /= static_cast<double>(indices.size());
        double var_w = 0.0;
        double cov_wy = 0.0;
        for (size_t i : indices) {
            const double dw = dataset.records()[i].prior_path_length - mean_w;
            const double dy = dataset.records()[i].residual_path_length - mean_y;
            var_w += dw * dw;
            cov_wy += dw * dy;
        }
        const double slope = var_w > kVarianceEps ? cov_wy / var_w : 0.0;
        for (size_t i : indices) {
            const double dw = dataset.records()[i].prior_path_length - mean_w;
            adjusted.values[i] = dataset.records()[i].residual_path_length - slope * dw;
        }
    }
    return adjusted;
}

std::map<std::string, std::pair<double, int>> global_arm_sums(const EffectDataset& dataset,
                                                              const AdjustedOutcomes& adjusted) {
    std::map<std::string, std::pair<double, int>> sums;
    for (size_t i = 0; i < dataset.records().size(); ++i) {
        auto& [sum, n] = sums[dataset.records()[i].macro.to_string()];
        sum += adjusted.values[i];
        n += 1;
    }
    return sums;
}

double stratified_mean_estimate(const AdjustedOutcomes& adjusted,
                                const std::map<std::string, std::pair<double, int>>& global,
                                const std::vector<size_t>& arm_indices, const std::string& arm,
                                double shrinkage_weight) {
    double sum = 0.0;
    for (size_t i : arm_indices) sum += adjusted.values[i];
    const double n = static_cast<double>(arm_indices.size());
    const double mean = sum / n;
    if (shrinkage_weight <= 0.0) return mean;
    const auto& [gsum, gn] = global.at(arm);
    const double global_mean = gsum / static_cast<double>(gn);
    return (n * mean + shrinkage_weight * global_mean) / (n + shrinkage_weight);
}

// ---- DoublyRobustForest backend -------------------------------------------
//
// Treats each macro arm one-vs-rest within its context stratum and computes a
// cross-fitted AIPW estimate of the arm's expected residual path length, with
// prior_path_length as the adjustment covariate. The outcome model is an
// honest regression forest over that single covariate; the propensity model
// is an L2-regularized logistic regression.

struct TreeNode {
    bool leaf = true;
    double value = 0.0;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(double w) const {
        int i = 0;
        while (!nodes[static_cast<size_t>(i)].leaf) {
            i = w <= nodes[static_cast<size_t>(i)].threshold ? nodes[static_cast<size_t>(i)].left
                                                             : nodes[static_cast<size_t>(i)].right;
        }
        return nodes[static_cast<size_t>(i)].value;
    }
};

struct Sample {
    double w = 0.0;
    double y = 0.0;
};

int build_node(Tree& tree, std::vector<Sample> structure, std::vector<Sample> estimation,
               int min_samples_leaf, double fallback) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    double leaf_value = fallback;
    if (!estimation.empty()) {
        double s = 0.0;
        for (const auto& p : estimation) s += p.y;
        leaf_value = s / static_cast<double>(estimation.size());
    }

    auto make_leaf = [&]() {
        tree.nodes[static_cast<size_t>(id)].leaf = true;
        tree.nodes[static_cast<size_t>(id)].value = leaf_value;
        return id;
    };

    if (static_cast<int>(structure.size()) < 2 * min_samples_leaf) return make_leaf();

    std::sort(structure.begin(), structure.end(),
              [](const Sample& a, const Sample& b) { return a.w < b.w; });

    // Best single split on w by sum-of-squares reduction, honoring the leaf
    // minimum on the structure half.
    double best_score = -1.0;
    double best_threshold = 0.0;
    const size_t n = structure.size();
    std::vector<double> prefix(n + 1, 0.0);
    std::vector<double> prefix_sq(n + 1, 0.0);
    for (size_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + structure[i].y;
        prefix_sq[i + 1] = prefix_sq[i] + structure[i].y * structure[i].y;
    }
    const double total_sse = prefix_sq[n] - prefix[n] * prefix[n] / static_cast<double>(n);
    for (size_t i = static_cast<size_t>(min_samples_leaf);
         i + static_cast<size_t>(min_samples_leaf) <= n; ++i) {
        if (structure[i - 1].w == structure[i].w) continue; // not a valid cut point
        const double nl = static_cast<double>(i);
        const double nr = static_cast<double>(n - i);
        const double sse_l = prefix_sq[i] - prefix[i] * prefix[i] / nl;
        const double sse_r = (prefix_sq[n] - prefix_sq[i]) -
                             (prefix[n] - prefix[i]) * (prefix[n] - prefix[i]) / nr;
        const double score = total_sse - sse_l - sse_r;
        if (score > best_score + kVarianceEps) {
            best_score = score;
            best_threshold = 0.5 * (structure[i - 1].w + structure[i].w);
        }
    }
    if (best_score <= kVarianceEps) return make_leaf();

    auto split = [&](const std::vector<Sample>& pts) {
        std::pair<std::vector<Sample>, std::vector<Sample>> parts;
        for (const auto& p : pts) {
            (p.w <= best_threshold ? parts.first : parts.second).push_back(p);
        }
        return parts;
    };
    auto [sl, sr] = split(structure);
    auto [el, er] = split(estimation);

    tree.nodes[static_cast<size_t>(id)].leaf = false;
    tree.nodes[static_cast<size_t>(id)].threshold = best_threshold;
    const int left = build_node(tree, std::move(sl), std::move(el), min_samples_leaf, leaf_value);
    const int right = build_node(tree, std::move(sr), std::move(er), min_samples_leaf, leaf_value);
    tree.nodes[static_cast<size_t>(id)].left = left;
    tree.nodes[static_cast<size_t>(id)].right = right;
    return id;
}

struct Forest {
    std::vector<Tree> trees;
    double fallback = 0.0;

    double predict(double w) const {
        if (trees.empty()) return fallback;
        double s = 0.0;
        for (const auto& t : trees) s += t.predict(w);
        return s / static_cast<double>(trees.size());
    }
};

Forest fit_forest(const std::vector<Sample>& samples, const ForestParams& params, Rng& rng) {
    Forest forest;
    if (samples.empty()) return forest;
    double mean = 0.0;
    for (const auto& p : samples) mean += p.y;
    mean /= static_cast<double>(samples.size());
    forest.fallback = mean;

    for (int t = 0; t < params.n_estimators; ++t) {
        // Bootstrap, then an honest split of the resample into structure and
        // estimation halves.
        std::vector<Sample> boot(samples.size());
        for (auto& p : boot) p = samples[static_cast<size_t>(rng.next_int(
                                   static_cast<int>(samples.size())))];
        const size_t half = boot.size() / 2;
        std::vector<Sample> structure(boot.begin(), boot.begin() + static_cast<long>(half));
        std::vector<Sample> estimation(boot.begin() + static_cast<long>(half), boot.end());
        Tree tree;
        build_node(tree, std::move(structure), std::move(estimation), params.min_samples_leaf,
                   mean);
        forest.trees.push_back(std::move(tree));
    }
    return forest;
}

struct LogisticModel {
    double intercept = 0.0;
    double slope = 0.0;
    double w_mean = 0.0;
    double w_scale = 1.0;

    double predict(double w) const {
        const double z = intercept + slope * (w - w_mean) / w_scale;
        return 1.0 / (1.0 + std::exp(-z));
    }
};

LogisticModel fit_logistic(const std::vector<std::pair<double, int>>& data, double alpha,
                           int max_iter) {
    LogisticModel m;
    if (data.empty()) return m;
    double mean = 0.0;
    for (const auto& [w, z] : data) mean += w;
    mean /= static_cast<double>(data.size());
    double var = 0.0;
    for (const auto& [w, z] : data) var += (w - mean) * (w - mean);
    var /= static_cast<double>(data.size());
    m.w_mean = mean;
    m.w_scale = var > kVarianceEps ? std::sqrt(var) : 1.0;

    const double lr = 0.5;
    const double n = static_cast<double>(data.size());
    for (int it = 0; it < max_iter; ++it) {
        double g0 = 0.0;
        double g1 = 0.0;
        for (const auto& [w, z] : data) {
            const double x = (w - m.w_mean) / m.w_scale;
            const double p = 1.0 / (1.0 + std::exp(-(m.intercept + m.slope * x)));
            g0 += p - z;
            g1 += (p - z) * x;
        }
        g0 = g0 / n + alpha * m.intercept / n;
        g1 = g1 / n + alpha * m.slope / n;
        m.intercept -= lr * g0;
        m.slope -= lr * g1;
        if (std::abs(g0) < 1e-10 && std::abs(g1) < 1e-10) break;
    }
    return m;
}

double clip_propensity(double p) { return std::clamp(p, 0.02, 0.98); }

double doubly_robust_estimate(const EffectDataset& dataset,
                              const std::vector<size_t>& context_indices,
                              const std::string& arm, const ForestParams& params,
                              const CollisionContext& context) {
    const auto& records = dataset.records();
    const int n = static_cast<int>(context_indices.size());
    const int folds = std::min(params.cv, n);

    std::uint64_t seed = derive_seed(params.seed, "drf");
    seed = fnv1a64(arm, seed);
    char key[64];
    std::snprintf(key, sizeof(key), "|%d,%d,%c", context.state.row, context.state.col,
                  action_to_char(context.attempted_direction));
    seed = fnv1a64(key, seed);

    std::vector<double> mu(static_cast<size_t>(n), 0.0);
    std::vector<double> eh(static_cast<size_t>(n), 0.5);

    for (int fold = 0; fold < std::max(folds, 1); ++fold) {
        std::vector<Sample> train_arm;
        std::vector<std::pair<double, int>> train_prop;
        for (int j = 0; j < n; ++j) {
            if (folds > 1 && j % folds == fold) continue;
            const auto& r = records[context_indices[static_cast<size_t>(j)]];
            const int z = r.macro.to_string() == arm ? 1 : 0;
            if (z == 1) {
                train_arm.push_back({static_cast<double>(r.prior_path_length),
                                     static_cast<double>(r.residual_path_length)});
            }
            train_prop.push_back({static_cast<double>(r.prior_path_length), z});
        }
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(fold)));
        const Forest forest = fit_forest(train_arm, params, rng);
        const LogisticModel prop = fit_logistic(train_prop, params.alpha, params.max_iter);
        for (int j = 0; j < n; ++j) {
            if (folds > 1 && j % folds != fold) continue;
            const auto& r = records[context_indices[static_cast<size_t>(j)]];
            const double w = static_cast<double>(r.prior_path_length);
            mu[static_cast<size_t>(j)] =
                forest.trees.empty() && train_arm.empty() ? 0.0 : forest.predict(w);
            eh[static_cast<size_t>(j)] = clip_propensity(prop.predict(w));
        }
        if (folds <= 1) break;
    }

    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
        const auto& r = records[context_indices[static_cast<size_t>(j)]];
        double psi = mu[static_cast<size_t>(j)];
        if (r.macro.to_string() == arm) {
            psi += (r.residual_path_length - mu[static_cast<size_t>(j)]) /
                   eh[static_cast<size_t>(j)];
        }
        sum += psi;
    }
    return sum / static_cast<double>(n);
}

struct EstimationState {
    AdjustedOutcomes adjusted;
    std::map<std::string, std::pair<double, int>> global;
};

EstimationState prepare(const EffectDataset& dataset) {
    EstimationState s;
    s.adjusted = adjust_for_prior(dataset);
    s.global = global_arm_sums(dataset, s.adjusted);
    return s;
}

double estimate_one(const EffectDataset& dataset, const EstimationState& state,
                    const CollisionContext& context, const std::vector<size_t>& context_indices,
                    const std::vector<size_t>& arm_indices, const std::string& arm,
                    int macro_length, const EstimatorConfig& config) {
    double estimate = 0.0;
    if (config.backend == EstimatorConfig::Backend::StratifiedMean) {
        estimate = stratified_mean_estimate(state.adjusted, state.global, arm_indices, arm,
                                            config.shrinkage_weight);
    } else {
        estimate = doubly_robust_estimate(dataset, context_indices, arm, *config.forest_params,
                                          context);
    }
    // A macro's expected residual can never undercut the macro's own length.
    return std::max(estimate, static_cast<double>(macro_length));
}

} // namespace

LookupModel fit(const EffectDataset& dataset, const EstimatorConfig& config,
                const ModelProvenance& provenance) {
    config.validate();
    if (dataset.empty()) {
        throw std::invalid_argument("fit: empty dataset");
    }

    const EstimationState state = prepare(dataset);
    LookupModel model;
    model.provenance = provenance;

    for (const auto& [context, indices] : dataset.by_context()) {
        std::map<std::string, std::vector<size_t>> arms;
        for (size_t i : indices) {
            arms[dataset.records()[i].macro.to_string()].push_back(i);
        }
        bool have_best = false;
        LookupEntry best;
        std::string best_arm;
        for (const auto& [arm, arm_indices] : arms) {
            if (static_cast<int>(arm_indices.size()) < config.min_samples_per_arm) continue;
            const auto& macro = dataset.records()[arm_indices.front()].macro;
            const double est = estimate_one(dataset, state, context, indices, arm_indices, arm,
                                            macro.length(), config);
            const bool better =
                !have_best || est < best.estimated_effect ||
                (est == best.estimated_effect &&
                 (macro.length() < best.macro.length() ||
                  (macro.length() == best.macro.length() && arm < best_arm)));
            if (better) {
                best = {macro, est, static_cast<int>(arm_indices.size())};
                best_arm = arm;
                have_best = true;
            }
        }
        if (have_best) {
            model.entries[context] = std::move(best);
        }
    }
    if (model.entries.empty()) {
        model.warning = "all contexts under-supported";
    }
    return model;
}

double estimate_effect(const EffectDataset& dataset, const CollisionContext& context,
                       const RecoveryMacro& macro, const EstimatorConfig& config) {
    config.validate();
    const auto ctx_it = dataset.by_context().find(context);
    if (ctx_it == dataset.by_context().end()) {
        throw std::invalid_argument("estimate_effect: unseen context");
    }
    const std::string arm = macro.to_string();
    std::vector<size_t> arm_indices;
    for (size_t i : ctx_it->second) {
        if (dataset.records()[i].macro.to_string() == arm) arm_indices.push_back(i);
    }
    if (arm_indices.empty()) {
        throw std::invalid_argument("estimate_effect: unseen (context, macro) pair");
    }
    const EstimationState state = prepare(dataset);
    return estimate_one(dataset, state, context, ctx_it->second, arm_indices, arm,
                        macro.length(), config);
}

std::optional<RecoveryMacro> query(const LookupModel& model, const CollisionContext& context) {
    const auto it = model.entries.find(context);
    if (it == model.entries.end()) return std::nullopt;
    return it->second.macro;
}

std::string LookupModel::serialize() const {
    std::ostringstream os;
    os << "# cktx-lookup-model v1\n";
    os << "# scenario=" << provenance.scenario_id << " teacher_goal=" << provenance.teacher_goal_id
       << " fit=" << provenance.fit_id << " config=" << provenance.config_hash << "\n";
    os << "state_row,state_col,attempted,macro,effect,support\n";
    char buf[64];
    for (const auto& [context, entry] : entries) {
        std::snprintf(buf, sizeof(buf), "%.17g", entry.estimated_effect);
        os << context.state.row << "," << context.state.col << ","
           << action_to_char(context.attempted_direction) << "," << entry.macro.to_string() << ","
           << buf << "," << entry.support << "\n";
    }
    return os.str();
}

LookupModel LookupModel::deserialize(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line) || line != "# cktx-lookup-model v1") {
        throw std::invalid_argument("unrecognized lookup model format");
    }
    LookupModel model;
    if (!std::getline(is, line) || line.rfind("# scenario=", 0) != 0) {
        throw std::invalid_argument("lookup model provenance line missing");
    }
    {
        std::istringstream ps(line.substr(2));
        std::string token;
        while (ps >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = token.substr(0, eq);
            const std::string value = token.substr(eq + 1);
            if (key == "scenario") model.provenance.scenario_id = value;
            else if (key == "teacher_goal") model.provenance.teacher_goal_id = value;
            else if (key == "fit") model.provenance.fit_id = value;
            else if (key == "config") model.provenance.config_hash = value;
        }
    }
    if (!std::getline(is, line) || line != "state_row,state_col,attempted,macro,effect,support") {
        throw std::invalid_argument("lookup model column header missing");
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        auto next = [&]() {
            if (!std::getline(ls, field, ',')) {
                throw std::invalid_argument("truncated lookup model row");
            }
            return field;
        };
        CollisionContext context;
        context.state.row = std::stoi(next());
        context.state.col = std::stoi(next());
        const std::string dir = next();
        auto a = dir.size() == 1 ? action_from_char(dir[0]) : std::nullopt;
        if (!a) throw std::invalid_argument("bad attempted direction in lookup model");
        context.attempted_direction = *a;
        LookupEntry entry;
        entry.macro = RecoveryMacro::from_string(next());
        if (entry.macro.actions.empty()) {
            throw std::invalid_argument("lookup model row with empty macro");
        }
        entry.estimated_effect = std::stod(next());
        entry.support = std::stoi(next());
        model.entries[context] = std::move(entry);
    }
    return model;
}

} // namespace cktx
