#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "alsched/strategies.hpp"

namespace alsched {

namespace {

void require_model(const SelectionRequest& req, const char* strategy) {
    if (!req.model) throw StrategyUnavailable(std::string(strategy) + ": no trained model yet");
}

void require_labels(const SelectionRequest& req, std::size_t minimum, const char* strategy) {
    if (req.labeled.size() < minimum)
        throw StrategyUnavailable(std::string(strategy) + ": needs at least " + std::to_string(minimum) +
                                  " labeled samples, have " + std::to_string(req.labeled.size()));
}

}  // namespace

// ---------------------------------------------------------------------------
// Pr
// ---------------------------------------------------------------------------

std::vector<double> score_pr(const SelectionRequest& req) {
    require_model(req, "pr");
    require_labels(req, 1, "pr");
    const auto predictions = req.model->predict(req.pool.features());
    const auto labels = req.labeled.labels();
    std::vector<double> scores(predictions.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < predictions.size(); ++i)
        for (double y : labels) scores[i] = std::min(scores[i], std::abs(predictions[i] - y));
    return scores;
}

std::vector<std::size_t> select_pr(const SelectionRequest& req, bool sequential) {
    req.validate();
    auto scores = score_pr(req);
    if (!sequential) return top_b(scores, req.budget);
    const auto predictions = req.model->predict(req.pool.features());
    std::vector<std::size_t> picks;
    std::vector<char> taken(scores.size(), 0);
    while (picks.size() < req.budget) {
        std::size_t best = scores.size();
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (!taken[i] && (best == scores.size() || scores[i] > scores[best])) best = i;
        taken[best] = 1;
        picks.push_back(best);
        for (std::size_t i = 0; i < scores.size(); ++i)
            scores[i] = std::min(scores[i], std::abs(predictions[i] - predictions[best]));
    }
    return picks;
}

// ---------------------------------------------------------------------------
// UDi
// ---------------------------------------------------------------------------

double entropy(std::span<const double> distribution) {
    double h = 0.0;
    for (double p : distribution)
        if (p > 0.0) h -= p * std::log(p);
    return std::max(h, 0.0);
}

std::vector<int> discretize_labels(std::span<const double> labels, const UdiConfig& cfg) {
    if (cfg.bins < 2) throw ConfigError("udi_bins", "must be at least 2");
    if (labels.empty()) throw StrategyUnavailable("udi: no labels to discretize");
    std::vector<double> sorted(labels.begin(), labels.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    for (int k = 1; k < cfg.bins; ++k) {
        const double q = static_cast<double>(k) / cfg.bins;
        if (cfg.binning == Binning::equal_width) {
            edges.push_back(sorted.front() + q * (sorted.back() - sorted.front()));
        } else {
            const double pos = q * static_cast<double>(sorted.size() - 1);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const auto hi = std::min(lo + 1, sorted.size() - 1);
            edges.push_back(sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]));
        }
    }
    std::vector<int> classes(labels.size());
    std::vector<char> used(static_cast<std::size_t>(cfg.bins), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        classes[i] = static_cast<int>(std::lower_bound(edges.begin(), edges.end(), labels[i]) - edges.begin());
        used[static_cast<std::size_t>(classes[i])] = 1;
    }
    if (std::count(used.begin(), used.end(), 1) < 2)
        throw StrategyUnavailable("udi: all labels fall into a single bin");
    return classes;
}

std::vector<double> score_udi(const SelectionRequest& req, const UdiConfig& cfg) {
    require_labels(req, 2, "udi");
    const auto classes = discretize_labels(req.labeled.labels(), cfg);
    ForestClassifier surrogate(cfg.surrogate);
    surrogate.fit(req.labeled.features(), classes, cfg.bins, mix_seed(req.seed, 0xD1));
    std::vector<double> scores(req.pool.size());
    for (std::size_t i = 0; i < req.pool.size(); ++i) scores[i] = entropy(surrogate.predict_proba(req.pool.samples[i].features));
    return scores;
}

// ---------------------------------------------------------------------------
// UCl
// ---------------------------------------------------------------------------

std::vector<std::size_t> select_ucl(const SelectionRequest& req, const UclConfig& cfg, UclTrace* trace) {
    req.validate();
    require_model(req, "ucl");
    if (cfg.top_clusters < 1 || cfg.top_clusters > cfg.clusters)
        throw ConfigError("ucl_top_clusters", "must lie in [1, K]");
    if (req.pool.size() < cfg.clusters) {
        spdlog::warn("ucl: pool of {} is smaller than K={}, selecting at random", req.pool.size(), cfg.clusters);
        return select_random(req);
    }
    const Matrix raw = req.pool.features();
    const Matrix z = Standardizer::fit(raw).transform(raw);
    UclTrace local;
    UclTrace& tr = trace ? *trace : local;
    tr.clustering = kmeans(z, cfg.clusters, mix_seed(req.seed, 0xC2));
    const auto predictions = req.model->predict(raw);

    const std::size_t k = cfg.clusters;
    std::vector<double> sum(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        sum[tr.clustering.assignment[i]] += predictions[i];
        ++count[tr.clustering.assignment[i]];
    }
    tr.cluster_variance.assign(k, 0.0);
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        const std::size_t c = tr.clustering.assignment[i];
        const double dev = predictions[i] - sum[c] / static_cast<double>(count[c]);
        tr.cluster_variance[c] += dev * dev;
    }
    for (std::size_t c = 0; c < k; ++c) tr.cluster_variance[c] /= static_cast<double>(count[c]);

    const auto ranked = top_b(tr.cluster_variance, k);
    std::vector<char> in_union(k, 0);
    std::size_t union_size = 0;
    tr.chosen_clusters.clear();
    for (std::size_t r = 0; r < k; ++r) {
        // extend past k clusters only when their members cannot cover the budget
        if (r >= cfg.top_clusters && union_size >= req.budget) break;
        in_union[ranked[r]] = 1;
        union_size += count[ranked[r]];
        tr.chosen_clusters.push_back(ranked[r]);
    }

    tr.silhouette = silhouettes(z, tr.clustering);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < raw.rows(); ++i)
        if (in_union[tr.clustering.assignment[i]]) candidates.push_back(i);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) { return tr.silhouette[a] < tr.silhouette[b]; });
    candidates.resize(req.budget);
    return candidates;
}

// ---------------------------------------------------------------------------
// UMSE
// ---------------------------------------------------------------------------

std::vector<double> score_umse(const SelectionRequest& req) {
    require_model(req, "umse");
    require_labels(req, 1, "umse");
    const auto space = request_space(req);
    const auto labels = req.labeled.labels();
    const auto fitted = req.model->predict(req.labeled.features());
    std::vector<double> sq_err(labels.size());
    for (std::size_t j = 0; j < labels.size(); ++j) sq_err[j] = (labels[j] - fitted[j]) * (labels[j] - fitted[j]);

    std::vector<double> scores(req.pool.size());
    for (std::size_t i = 0; i < req.pool.size(); ++i) {
        double num = 0.0, den = 0.0, coincident = 0.0;
        std::size_t n_coincident = 0;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            const double d = euclidean_distance(space.pool.row(i), space.labeled.row(j));
            if (d == 0.0) {
                coincident += sq_err[j];
                ++n_coincident;
                continue;
            }
            num += sq_err[j] / d;
            den += 1.0 / d;
        }
        scores[i] = n_coincident ? coincident / static_cast<double>(n_coincident) : num / den;
    }
    return scores;
}

// ---------------------------------------------------------------------------
// QBC and EMCM
// ---------------------------------------------------------------------------

std::vector<double> score_qbc(const SelectionRequest& req, const CommitteeSpec& spec) {
    require_labels(req, 2, "qbc");
    const Committee committee = build_committee(spec, req.labeled.features(), req.labeled.labels(), mix_seed(req.seed, 0xC0));
    const auto preds = committee_predictions(committee, req.pool.features());
    const double c = static_cast<double>(preds.size());
    std::vector<double> scores(req.pool.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        double mean = 0.0;
        for (const auto& p : preds) mean += p[i];
        mean /= c;
        double var = 0.0;
        for (const auto& p : preds) var += (p[i] - mean) * (p[i] - mean);
        scores[i] = var / c;
    }
    return scores;
}

double emcm_model_change(std::span<const double> x, double main_prediction, std::span<const double> member_predictions,
                         double learning_rate) {
    double total = 0.0;
    for (double member : member_predictions) {
        const double factor = 2.0 * learning_rate * (main_prediction - member);
        double norm_sq = 0.0;
        for (double v : x) norm_sq += (factor * v) * (factor * v);
        total += norm_sq;
    }
    return total / static_cast<double>(member_predictions.size());
}

std::vector<double> score_emcm(const SelectionRequest& req, const EmcmConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("emcm_learning_rate", "must be positive");
    require_model(req, "emcm");
    require_labels(req, 2, "emcm");
    const Committee committee =
        build_committee(cfg.committee, req.labeled.features(), req.labeled.labels(), mix_seed(req.seed, 0xE0));
    const Matrix raw = req.pool.features();
    const auto main = req.model->predict(raw);
    const auto preds = committee_predictions(committee, raw);
    const auto space = request_space(req);

    std::vector<double> scores(raw.rows());
    std::vector<double> x_tilde(raw.cols() + 1, 1.0);
    std::vector<double> members(preds.size());
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        std::copy(space.pool.row(i).begin(), space.pool.row(i).end(), x_tilde.begin());
        for (std::size_t c = 0; c < preds.size(); ++c) members[c] = preds[c][i];
        scores[i] = emcm_model_change(x_tilde, main[i], members, cfg.learning_rate);
    }
    return scores;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

namespace {

constexpr std::pair<StrategyName, const char*> kNames[] = {
    {StrategyName::random, "random"},       {StrategyName::pareto, "pareto"},
    {StrategyName::di, "di"},               {StrategyName::cl, "cl"},
    {StrategyName::pr, "pr"},               {StrategyName::udi, "udi"},
    {StrategyName::ucl, "ucl"},             {StrategyName::umse, "umse"},
    {StrategyName::qbc_boot, "qbc_boot"},   {StrategyName::qbc_model, "qbc_model"},
    {StrategyName::emcm_boot, "emcm_boot"}, {StrategyName::emcm_model, "emcm_model"},
};

}  // namespace

std::string to_string(StrategyName name) {
    for (const auto& [n, s] : kNames)
        if (n == name) return s;
    return "?";
}

StrategyName parse_strategy(std::string_view text) {
    for (const auto& [n, s] : kNames)
        if (text == s) return n;
    throw std::invalid_argument("unknown strategy '" + std::string(text) + "'");
}

bool is_initialization_strategy(StrategyName name) {
    return name == StrategyName::random || name == StrategyName::pareto || name == StrategyName::di ||
           name == StrategyName::cl;
}

std::vector<std::size_t> select(StrategyName name, const SelectionRequest& req, const StrategyConfig& cfg) {
    req.validate();
    switch (name) {
        case StrategyName::random: return select_random(req);
        case StrategyName::pareto: {
            if (!cfg.pareto) throw ConfigError("pareto", "strategy 'pareto' needs positive/negative feature sets");
            return select_pareto(req, *cfg.pareto);
        }
        case StrategyName::di: return select_distance(req);
        case StrategyName::cl: return select_clustering(req, cfg.cl_clusters);
        case StrategyName::pr: return select_pr(req, cfg.pr_sequential);
        case StrategyName::udi: return top_b(score_udi(req, cfg.udi), req.budget);
        case StrategyName::ucl: return select_ucl(req, cfg.ucl);
        case StrategyName::umse: return top_b(score_umse(req), req.budget);
        case StrategyName::qbc_boot:
        case StrategyName::qbc_model: {
            CommitteeSpec spec = cfg.qbc;
            spec.mode = name == StrategyName::qbc_boot ? CommitteeMode::bootstrap : CommitteeMode::model;
            return top_b(score_qbc(req, spec), req.budget);
        }
        case StrategyName::emcm_boot:
        case StrategyName::emcm_model: {
            EmcmConfig emcm = cfg.emcm;
            emcm.committee.mode = name == StrategyName::emcm_boot ? CommitteeMode::bootstrap : CommitteeMode::model;
            return top_b(score_emcm(req, emcm), req.budget);
        }
    }
    throw std::invalid_argument("unknown strategy");
}

}  // namespace alsched
