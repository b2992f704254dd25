#pragma once

// L2-regularised logistic regression with a constant bias feature of value 1
// whose weight is regularised along with the others:
//
//   f(w, b) = 1/2 (||w||^2 + b^2) + C * sum_i log(1 + exp(-y_i (w.x_i + b)))
//
// Labels are +1 (private) and -1 (public). Training uses a truncated Newton
// method (conjugate gradient on the Hessian system) with Armijo backtracking.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "udf/batch.hpp"
#include "udf/error.hpp"
#include "udf/linear_model.hpp"
#include "udf/parallel.hpp"

namespace udf {

namespace detail {

/// log(1 + exp(-m)) without overflow.
inline double log1p_exp_neg(double m) {
    return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

/// 1 / (1 + exp(-m)).
inline double sigmoid(double m) {
    if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
    const double e = std::exp(m);
    return e / (1.0 + e);
}

inline void check_problem(const FeatureVectorBatch& x, std::span<const int> y, std::size_t dim) {
    if (x.dim() != dim) {
        throw DimensionError("logistic regression: feature dim " + std::to_string(x.dim()) +
                             " does not match model dim " + std::to_string(dim));
    }
    if (y.size() != x.count()) {
        throw DimensionError("logistic regression: " + std::to_string(y.size()) + " labels for " +
                             std::to_string(x.count()) + " samples");
    }
    for (int v : y) {
        if (v != 1 && v != -1) throw DataError("logistic regression: labels must be +1 or -1");
    }
}

/// Weight vector augmented with the bias weight as its last coordinate.
inline std::vector<double> augmented(const LinearModel& m) {
    std::vector<double> w = m.weights;
    w.push_back(m.bias_weight);
    return w;
}

inline double margin(std::span<const float> x, std::span<const double> w_aug) {
    double s = w_aug.back();
    for (std::size_t j = 0; j < x.size(); ++j) s += w_aug[j] * x[j];
    return s;
}

inline double objective(const FeatureVectorBatch& x, std::span<const int> y, std::span<const double> w,
                        double C) {
    double reg = 0.0;
    for (double v : w) reg += v * v;
    double loss = 0.0;
    for (std::size_t i = 0; i < x.count(); ++i) loss += log1p_exp_neg(y[i] * margin(x.row(i), w));
    return 0.5 * reg + C * loss;
}

/// Gradient at w; also fills the Hessian diagonal weights D_i = s(1-s).
inline std::vector<double> gradient(const FeatureVectorBatch& x, std::span<const int> y,
                                    std::span<const double> w, double C,
                                    std::vector<double>* curvature = nullptr) {
    const std::size_t d = x.dim();
    std::vector<double> g(w.begin(), w.end());
    if (curvature != nullptr) curvature->resize(x.count());
    for (std::size_t i = 0; i < x.count(); ++i) {
        const auto row = x.row(i);
        const double s = sigmoid(y[i] * margin(row, w));
        const double coef = C * (s - 1.0) * y[i];
        for (std::size_t j = 0; j < d; ++j) g[j] += coef * row[j];
        g[d] += coef;
        if (curvature != nullptr) (*curvature)[i] = s * (1.0 - s);
    }
    return g;
}

/// (I + C X~^T D X~) v
inline std::vector<double> hessian_times(const FeatureVectorBatch& x, std::span<const double> curvature,
                                         double C, std::span<const double> v) {
    const std::size_t d = x.dim();
    std::vector<double> out(v.begin(), v.end());
    for (std::size_t i = 0; i < x.count(); ++i) {
        const auto row = x.row(i);
        const double coef = C * curvature[i] * margin(row, v);
        for (std::size_t j = 0; j < d; ++j) out[j] += coef * row[j];
        out[d] += coef;
    }
    return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

} // namespace detail

inline double lr_objective(const LinearModel& model, const FeatureVectorBatch& x, std::span<const int> y) {
    detail::check_problem(x, y, model.dim());
    const auto w = detail::augmented(model);
    return detail::objective(x, y, w, model.C);
}

/// Gradient with respect to (weights..., bias_weight).
inline std::vector<double> lr_gradient(const LinearModel& model, const FeatureVectorBatch& x,
                                       std::span<const int> y) {
    detail::check_problem(x, y, model.dim());
    const auto w = detail::augmented(model);
    return detail::gradient(x, y, w, model.C);
}

struct TrainOptions {
    double tol = 1e-6;
    std::size_t max_iter = 1000;
};

/// Objective value before the first and after every Newton iteration.
struct TrainTrace {
    std::vector<double> objective_history;
};

/// Minimises the objective. Converged when ||grad|| <= tol * (1 + |f|).
/// `start` optionally supplies the initial point (its C is ignored).
inline LinearModel train(const FeatureVectorBatch& x, std::span<const int> y, double C,
                         const TrainOptions& options = {}, const LinearModel* start = nullptr,
                         TrainTrace* trace = nullptr) {
    if (!(C > 0.0) || !std::isfinite(C)) throw DataError("train: C must be positive and finite");
    detail::check_problem(x, y, x.dim());
    if (auto bad = detail::first_non_finite(x.data(), x.dim())) {
        throw DataError("train: non-finite feature in sample " + std::to_string(*bad));
    }
    const bool has_pos = std::find(y.begin(), y.end(), 1) != y.end();
    const bool has_neg = std::find(y.begin(), y.end(), -1) != y.end();
    if (!has_pos || !has_neg) throw DataError("train: training data contains a single class");

    const std::size_t d = x.dim();
    std::vector<double> w(d + 1, 0.0);
    if (start != nullptr) {
        if (start->dim() != d) throw DimensionError("train: initial model dim does not match features");
        w = detail::augmented(*start);
    }

    std::vector<double> curvature;
    double f = detail::objective(x, y, w, C);
    std::vector<double> g = detail::gradient(x, y, w, C, &curvature);
    if (trace != nullptr) trace->objective_history.assign(1, f);

    LinearModel model;
    model.C = C;
    std::size_t it = 0;
    bool converged = false;
    for (;; ++it) {
        const double gnorm = detail::norm(g);
        if (gnorm <= options.tol * (1.0 + std::fabs(f))) {
            converged = true;
            break;
        }
        if (it >= options.max_iter) break;

        // Conjugate gradient on H s = -g, truncated at a forcing tolerance.
        const double cg_tol = std::min(0.5, std::sqrt(gnorm)) * gnorm;
        std::vector<double> s(d + 1, 0.0);
        std::vector<double> r(g.size());
        std::transform(g.begin(), g.end(), r.begin(), [](double v) { return -v; });
        std::vector<double> p = r;
        double rr = detail::dot(r, r);
        for (std::size_t cg = 0; cg < 2 * (d + 1) && std::sqrt(rr) > cg_tol; ++cg) {
            const auto hp = detail::hessian_times(x, curvature, C, p);
            const double alpha = rr / detail::dot(p, hp);
            for (std::size_t j = 0; j <= d; ++j) {
                s[j] += alpha * p[j];
                r[j] -= alpha * hp[j];
            }
            const double rr_next = detail::dot(r, r);
            const double beta = rr_next / rr;
            rr = rr_next;
            for (std::size_t j = 0; j <= d; ++j) p[j] = r[j] + beta * p[j];
        }

        // Armijo backtracking; never accept an increase.
        const double slope = detail::dot(g, s);
        double step = 1.0;
        bool accepted = false;
        std::vector<double> trial(d + 1);
        double f_trial = f;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t j = 0; j <= d; ++j) trial[j] = w[j] + step * s[j];
            f_trial = detail::objective(x, y, trial, C);
            if (f_trial <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break; // no representable decrease left
        w.swap(trial);
        f = f_trial;
        g = detail::gradient(x, y, w, C, &curvature);
        if (trace != nullptr) trace->objective_history.push_back(f);
    }

    model.weights.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(d));
    model.bias_weight = w[d];
    model.train_meta.iterations = it;
    model.train_meta.final_objective = f;
    model.train_meta.final_gradient_norm = detail::norm(g);
    model.train_meta.converged = converged;
    return model;
}

struct Predictions {
    std::vector<int> labels;
    std::vector<double> scores;
};

/// label = sign(w.x + b); a score of exactly 0 maps to +1.
inline Predictions predict(const LinearModel& model, const FeatureVectorBatch& x) {
    if (x.dim() != model.dim()) {
        throw DimensionError("predict: feature dim " + std::to_string(x.dim()) +
                             " does not match model dim " + std::to_string(model.dim()));
    }
    const auto w = detail::augmented(model);
    Predictions p;
    p.labels.resize(x.count());
    p.scores.resize(x.count());
    for (std::size_t i = 0; i < x.count(); ++i) {
        p.scores[i] = detail::margin(x.row(i), w);
        p.labels[i] = p.scores[i] >= 0.0 ? 1 : -1;
    }
    return p;
}

struct EvalReport {
    double accuracy = 0.0;
    /// confusion[t][p]: t, p = 0 for private (+1), 1 for public (-1).
    std::array<std::array<std::size_t, 2>, 2> confusion{};
    double predict_seconds = 0.0;
    std::size_t count = 0;
};

inline EvalReport evaluate(const LinearModel& model, const FeatureVectorBatch& x, std::span<const int> y) {
    if (y.size() != x.count()) {
        throw DimensionError("evaluate: " + std::to_string(y.size()) + " labels for " +
                             std::to_string(x.count()) + " samples");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto pred = predict(model, x);
    const auto t1 = std::chrono::steady_clock::now();

    EvalReport report;
    report.count = x.count();
    report.predict_seconds = std::chrono::duration<double>(t1 - t0).count();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const std::size_t t = y[i] > 0 ? 0 : 1;
        const std::size_t p = pred.labels[i] > 0 ? 0 : 1;
        ++report.confusion[t][p];
        correct += (t == p);
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(y.size());
    return report;
}

struct GridSearchConfig {
    std::vector<double> c_values = [] {
        std::vector<double> v(50);
        std::iota(v.begin(), v.end(), 1.0);
        return v;
    }();
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    TrainOptions train;
};

struct GridSearchRow {
    double C = 0.0;
    double mean_accuracy = 0.0;
    std::vector<double> fold_accuracy;
};

struct GridSearchResult {
    double best_C = 0.0;
    double best_accuracy = 0.0;
    std::vector<GridSearchRow> rows; // one per c_values entry, in input order
};

/// Stratified fold index per sample. Each class is shuffled with the seed
/// and dealt round-robin, continuing the count from the previous class.
inline std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t folds,
                                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> fold(y.size());
    std::size_t next = 0;
    for (int cls : {1, -1}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] == cls) members.push_back(i);
        }
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t i : members) fold[i] = next++ % folds;
    }
    return fold;
}

inline GridSearchResult grid_search(const FeatureVectorBatch& x, std::span<const int> y,
                                    const GridSearchConfig& config) {
    detail::check_problem(x, y, x.dim());
    if (config.c_values.empty()) throw DataError("grid search: c_values is empty");
    for (double c : config.c_values) {
        if (!(c > 0.0)) throw DataError("grid search: C values must be positive");
    }
    const auto n_pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    const std::size_t min_class = std::min(n_pos, y.size() - n_pos);
    if (config.folds < 2 || config.folds > min_class) {
        throw DataError("grid search: " + std::to_string(config.folds) +
                        " folds is degenerate for a minority class of " + std::to_string(min_class) +
                        " samples (need 2 <= folds <= minority count)");
    }

    const auto fold_of = stratified_folds(y, config.folds, config.seed);
    struct Split {
        FeatureVectorBatch train_x, valid_x;
        std::vector<int> train_y, valid_y;
    };
    std::vector<Split> splits;
    for (std::size_t f = 0; f < config.folds; ++f) {
        std::vector<std::size_t> tr, va;
        std::vector<int> ty, vy;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (fold_of[i] == f) {
                va.push_back(i);
                vy.push_back(y[i]);
            } else {
                tr.push_back(i);
                ty.push_back(y[i]);
            }
        }
        splits.push_back({x.select(tr), x.select(va), std::move(ty), std::move(vy)});
    }

    const std::size_t n_c = config.c_values.size();
    std::vector<double> acc(n_c * config.folds);
    parallel_for(acc.size(), [&](std::size_t job) {
        const double C = config.c_values[job / config.folds];
        const auto& s = splits[job % config.folds];
        const auto model = train(s.train_x, s.train_y, C, config.train);
        acc[job] = evaluate(model, s.valid_x, s.valid_y).accuracy;
    });

    GridSearchResult result;
    for (std::size_t c = 0; c < n_c; ++c) {
        GridSearchRow row;
        row.C = config.c_values[c];
        row.fold_accuracy.assign(acc.begin() + static_cast<std::ptrdiff_t>(c * config.folds),
                                 acc.begin() + static_cast<std::ptrdiff_t>((c + 1) * config.folds));
        row.mean_accuracy = std::accumulate(row.fold_accuracy.begin(), row.fold_accuracy.end(), 0.0) /
                            static_cast<double>(config.folds);
        const bool better = result.rows.empty() || row.mean_accuracy > result.best_accuracy ||
                            (row.mean_accuracy == result.best_accuracy && row.C < result.best_C);
        if (better) {
            result.best_C = row.C;
            result.best_accuracy = row.mean_accuracy;
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

} // namespace udf
