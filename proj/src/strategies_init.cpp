#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "alsched/strategies.hpp"

namespace alsched {

void SelectionRequest::validate() const {
    if (budget < 1) throw BudgetError("budget must be at least 1");
    if (budget > pool.size())
        throw BudgetError("budget " + std::to_string(budget) + " exceeds pool size " + std::to_string(pool.size()));
    if (!labeled.empty() && labeled.entries().front().sample.dim() != pool.dim())
        throw DimensionError(pool.dim(), labeled.entries().front().sample.dim());
}

RequestSpace request_space(const SelectionRequest& req) {
    RequestSpace space;
    const Matrix pool = req.pool.features();
    const Matrix labeled = req.labeled.empty() ? Matrix(0, pool.cols()) : req.labeled.features();
    space.scaler = Standardizer::fit(pool, labeled);
    space.pool = space.scaler.transform(pool);
    space.labeled = space.scaler.transform(labeled);
    return space;
}

std::vector<std::size_t> top_b(std::span<const double> scores, std::size_t b) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    b = std::min(b, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(b), idx.end(), [&](std::size_t a, std::size_t c) {
        if (scores[a] != scores[c]) return scores[a] > scores[c];
        return a < c;
    });
    idx.resize(b);
    return idx;
}

// ---------------------------------------------------------------------------
// Pareto
// ---------------------------------------------------------------------------

void ParetoSpec::validate(std::size_t d) const {
    std::vector<int> seen(d, 0);
    for (auto j : positive) {
        if (j >= d) throw ConfigError("pareto", "feature index " + std::to_string(j) + " out of range");
        ++seen[j];
    }
    for (auto j : negative) {
        if (j >= d) throw ConfigError("pareto", "feature index " + std::to_string(j) + " out of range");
        ++seen[j];
    }
    for (std::size_t j = 0; j < d; ++j)
        if (seen[j] != 1)
            throw ConfigError("pareto", "positive and negative feature sets must partition all " + std::to_string(d) +
                                            " features (feature " + std::to_string(j) + " appears " +
                                            std::to_string(seen[j]) + " times)");
}

ParetoSpec ParetoSpec::from_names(const std::vector<std::string>& positive, const std::vector<std::string>& negative,
                                  const std::vector<std::string>& feature_names) {
    auto lookup = [&](const std::string& name) {
        auto it = std::find(feature_names.begin(), feature_names.end(), name);
        if (it == feature_names.end()) throw ConfigError("pareto", "unknown feature '" + name + "'");
        return static_cast<std::size_t>(it - feature_names.begin());
    };
    ParetoSpec spec;
    for (const auto& n : positive) spec.positive.push_back(lookup(n));
    for (const auto& n : negative) spec.negative.push_back(lookup(n));
    spec.validate(feature_names.size());
    return spec;
}

ParetoSpec ParetoSpec::from_signs(const std::vector<int>& signs) {
    ParetoSpec spec;
    for (std::size_t j = 0; j < signs.size(); ++j) (signs[j] > 0 ? spec.positive : spec.negative).push_back(j);
    return spec;
}

bool pareto_dominates(std::span<const double> x, std::span<const double> other, const ParetoSpec& spec,
                      DominanceDirection direction) {
    if (x.size() != other.size()) throw DimensionError(x.size(), other.size());
    // positive: x >= other on d+, x <= other on d-; negative: reversed
    const double sign = direction == DominanceDirection::positive ? 1.0 : -1.0;
    bool strict = false;
    for (auto j : spec.positive) {
        const double diff = sign * (x[j] - other[j]);
        if (diff < 0) return false;
        if (diff > 0) strict = true;
    }
    for (auto j : spec.negative) {
        const double diff = sign * (other[j] - x[j]);
        if (diff < 0) return false;
        if (diff > 0) strict = true;
    }
    return strict;
}

std::vector<std::size_t> pareto_front(const Matrix& pool, const ParetoSpec& spec) {
    spec.validate(pool.cols());
    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < pool.rows(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < pool.rows() && !dominated; ++j) {
            if (i == j) continue;
            dominated = pareto_dominates(pool.row(j), pool.row(i), spec, DominanceDirection::positive) ||
                        pareto_dominates(pool.row(j), pool.row(i), spec, DominanceDirection::negative);
        }
        if (!dominated) front.push_back(i);
    }
    return front;
}

std::vector<std::size_t> select_random(const SelectionRequest& req) {
    req.validate();
    Rng rng(req.seed);
    return rng.sample_without_replacement(req.pool.size(), req.budget);
}

std::vector<std::size_t> select_pareto(const SelectionRequest& req, const ParetoSpec& spec) {
    req.validate();
    const auto front = pareto_front(req.pool.features(), spec);
    Rng rng(req.seed);
    if (front.size() >= req.budget) {
        if (front.size() == req.budget) return front;
        std::vector<std::size_t> out;
        for (auto k : rng.sample_without_replacement(front.size(), req.budget)) out.push_back(front[k]);
        return out;
    }
    std::vector<std::size_t> out = front;
    std::vector<std::size_t> rest;
    std::set<std::size_t> in_front(front.begin(), front.end());
    for (std::size_t i = 0; i < req.pool.size(); ++i)
        if (!in_front.count(i)) rest.push_back(i);
    for (auto k : rng.sample_without_replacement(rest.size(), req.budget - front.size())) out.push_back(rest[k]);
    return out;
}

// ---------------------------------------------------------------------------
// Distance and clustering
// ---------------------------------------------------------------------------

std::vector<std::size_t> greedy_max_min(const Matrix& points, std::span<const std::size_t> candidates,
                                        const Matrix& reference, std::size_t b) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> min_dist(candidates.size(), inf);
    for (std::size_t r = 0; r < reference.rows(); ++r)
        for (std::size_t c = 0; c < candidates.size(); ++c)
            min_dist[c] = std::min(min_dist[c], euclidean_distance(points.row(candidates[c]), reference.row(r)));

    std::vector<double> score = min_dist;
    if (reference.rows() == 0 && points.rows() > 0) {
        std::vector<double> centroid(points.cols(), 0.0);
        for (std::size_t i = 0; i < points.rows(); ++i)
            for (std::size_t j = 0; j < points.cols(); ++j) centroid[j] += points(i, j);
        for (auto& v : centroid) v /= static_cast<double>(points.rows());
        for (std::size_t c = 0; c < candidates.size(); ++c) score[c] = euclidean_distance(points.row(candidates[c]), centroid);
    }

    std::vector<char> taken(candidates.size(), 0);
    std::vector<std::size_t> picks;
    b = std::min(b, candidates.size());
    while (picks.size() < b) {
        std::size_t best = candidates.size();
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (taken[c]) continue;
            if (best == candidates.size() || score[c] > score[best] ||
                (score[c] == score[best] && candidates[c] < candidates[best]))
                best = c;
        }
        taken[best] = 1;
        picks.push_back(candidates[best]);
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (taken[c]) continue;
            min_dist[c] = std::min(min_dist[c], euclidean_distance(points.row(candidates[c]), points.row(candidates[best])));
        }
        score = min_dist;
    }
    return picks;
}

std::vector<std::size_t> select_distance(const SelectionRequest& req) {
    req.validate();
    const auto space = request_space(req);
    std::vector<std::size_t> all(req.pool.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return greedy_max_min(space.pool, all, space.labeled, req.budget);
}

std::vector<std::size_t> select_clustering(const SelectionRequest& req, std::size_t k) {
    req.validate();
    if (req.pool.size() < k) {
        spdlog::warn("cl: pool of {} is smaller than K={}, using distance sampling", req.pool.size(), k);
        return select_distance(req);
    }
    const Matrix raw = req.pool.features();
    const Matrix z = Standardizer::fit(raw).transform(raw);
    const Clustering clustering = kmeans(z, k, mix_seed(req.seed, 0xC1));
    std::vector<std::size_t> reps;
    for (std::size_t c = 0; c < k; ++c) reps.push_back(medoid(z, clustering, c));
    std::sort(reps.begin(), reps.end());

    const auto space = request_space(req);
    auto picks = greedy_max_min(space.pool, reps, space.labeled, req.budget);
    if (picks.size() < req.budget) {
        Matrix reference = space.labeled.rows() ? space.labeled : Matrix(0, space.pool.cols());
        for (auto p : picks) reference.append_row(space.pool.row(p));
        std::set<std::size_t> used(picks.begin(), picks.end());
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < req.pool.size(); ++i)
            if (!used.count(i)) rest.push_back(i);
        for (auto p : greedy_max_min(space.pool, rest, reference, req.budget - picks.size())) picks.push_back(p);
    }
    return picks;
}

}  // namespace alsched
