#include "geoleak/poi_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <set>
#include <stdexcept>

namespace geoleak {

MatchResult match_pois(const std::vector<POI>& traffic_pois,
                       const std::vector<POI>& agent_pois, double match_dist_m) {
    struct Candidate {
        double dist;
        int traffic_id;
        int agent_id;
    };
    std::vector<Candidate> candidates;
    for (const auto& t : traffic_pois) {
        for (const auto& a : agent_pois) {
            double d = haversine_distance(t.centroid, a.centroid);
            if (d <= match_dist_m) candidates.push_back({d, t.poi_id, a.poi_id});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
        return std::tie(x.dist, x.traffic_id, x.agent_id) <
               std::tie(y.dist, y.traffic_id, y.agent_id);
    });

    MatchResult result;
    std::set<int> used_traffic, used_agent;
    for (const auto& c : candidates) {
        if (used_traffic.count(c.traffic_id) || used_agent.count(c.agent_id)) continue;
        used_traffic.insert(c.traffic_id);
        used_agent.insert(c.agent_id);
        result.pairs.push_back({c.traffic_id, c.agent_id, c.dist});
    }
    for (const auto& t : traffic_pois)
        if (!used_traffic.count(t.poi_id)) result.unmatched_traffic.push_back(t.poi_id);
    for (const auto& a : agent_pois)
        if (!used_agent.count(a.poi_id)) result.unmatched_agent.push_back(a.poi_id);
    std::sort(result.unmatched_traffic.begin(), result.unmatched_traffic.end());
    std::sort(result.unmatched_agent.begin(), result.unmatched_agent.end());
    return result;
}

ScoreReport precision_recall(const MatchResult& match, std::int64_t benchmark_size) {
    if (benchmark_size < 0)
        throw std::invalid_argument("precision_recall: negative benchmark size");
    ScoreReport report;
    report.true_positive = static_cast<std::int64_t>(match.pairs.size());
    report.total = report.true_positive +
                   static_cast<std::int64_t>(match.unmatched_traffic.size());
    report.precision = report.total == 0
                           ? 0.0
                           : static_cast<double>(report.true_positive) /
                                 static_cast<double>(report.total);
    if (benchmark_size == 0) {
        if (report.true_positive > 0)
            std::cerr << "[warn] precision_recall: empty benchmark, recall set to 0\n";
        report.recall = 0.0;
    } else {
        report.recall = static_cast<double>(report.true_positive) /
                        static_cast<double>(benchmark_size);
    }
    return report;
}

std::map<int, double> poi_weights(const std::vector<POI>& benchmark_pois) {
    std::map<int, double> weights;
    if (benchmark_pois.empty()) return weights;
    double total = 0.0;
    for (const auto& p : benchmark_pois) total += static_cast<double>(p.dwell_time_ms);
    if (total <= 0.0) {
        std::cerr << "[warn] poi_weights: zero total dwell, using uniform weights\n";
        const double w = 1.0 / static_cast<double>(benchmark_pois.size());
        for (const auto& p : benchmark_pois) weights[p.poi_id] = w;
        return weights;
    }
    for (const auto& p : benchmark_pois)
        weights[p.poi_id] = static_cast<double>(p.dwell_time_ms) / total;
    return weights;
}

double weighted_discovery(const MatchResult& match, const std::map<int, double>& weights) {
    double sum = 0.0;
    for (const auto& pair : match.pairs) {
        auto it = weights.find(pair.agent_poi_id);
        if (it != weights.end()) sum += it->second;
    }
    return sum;
}

namespace {

constexpr int kP = 4; // intercept + 3 regressors

// Modified Gram-Schmidt QR; p is tiny so this stays well conditioned.
struct Qr {
    std::vector<double> q; // n x p, column major
    double r[kP][kP] = {};
};

Qr qr_decompose(const std::vector<double>& x_colmajor, std::size_t n) {
    Qr qr;
    qr.q = x_colmajor;
    auto col = [&](int j) { return qr.q.data() + static_cast<std::size_t>(j) * n; };

    double max_norm = 0.0;
    for (int j = 0; j < kP; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += col(j)[i] * col(j)[i];
        max_norm = std::max(max_norm, std::sqrt(s));
    }
    const double tol = 1e-10 * std::max(1.0, max_norm);

    for (int j = 0; j < kP; ++j) {
        for (int k = 0; k < j; ++k) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += col(k)[i] * col(j)[i];
            qr.r[k][j] = dot;
            for (std::size_t i = 0; i < n; ++i) col(j)[i] -= dot * col(k)[i];
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm += col(j)[i] * col(j)[i];
        norm = std::sqrt(norm);
        if (norm <= tol)
            throw std::runtime_error("fit_exposure_regression: rank-deficient design matrix");
        qr.r[j][j] = norm;
        for (std::size_t i = 0; i < n; ++i) col(j)[i] /= norm;
    }
    return qr;
}

} // namespace

RegressionFit fit_exposure_regression(const std::vector<RegressionRow>& rows) {
    const std::size_t n = rows.size();
    if (n < 5)
        throw std::invalid_argument("fit_exposure_regression: need at least 5 rows");

    std::vector<double> x(n * kP);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[0 * n + i] = 1.0;
        x[1 * n + i] = rows[i].coverage;
        x[2 * n + i] = rows[i].leak_rate;
        x[3 * n + i] = rows[i].relative_stdev;
        y[i] = rows[i].weighted_discovery;
    }

    Qr qr = qr_decompose(x, n);
    auto qcol = [&](int j) { return qr.q.data() + static_cast<std::size_t>(j) * n; };

    // beta from R beta = Q^T y.
    double qty[kP];
    for (int j = 0; j < kP; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += qcol(j)[i] * y[i];
        qty[j] = s;
    }
    double beta[kP];
    for (int j = kP - 1; j >= 0; --j) {
        double s = qty[j];
        for (int k = j + 1; k < kP; ++k) s -= qr.r[j][k] * beta[k];
        beta[j] = s / qr.r[j][j];
    }

    double ssr = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_y += y[i];
    mean_y /= static_cast<double>(n);
    double sst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (int j = 0; j < kP; ++j) fit += x[static_cast<std::size_t>(j) * n + i] * beta[j];
        ssr += (y[i] - fit) * (y[i] - fit);
        sst += (y[i] - mean_y) * (y[i] - mean_y);
    }

    // (X^T X)^-1 = R^-1 R^-T for the classical covariance.
    double rinv[kP][kP] = {};
    for (int c = 0; c < kP; ++c) {
        double e[kP] = {};
        e[c] = 1.0;
        for (int j = kP - 1; j >= 0; --j) {
            double s = e[j];
            for (int k = j + 1; k < kP; ++k) s -= qr.r[j][k] * rinv[k][c];
            rinv[j][c] = s / qr.r[j][j];
        }
    }

    RegressionFit fit;
    fit.df = static_cast<std::int64_t>(n) - kP;
    const double sigma2 = fit.df > 0 ? ssr / static_cast<double>(fit.df) : 0.0;
    const char* names[kP] = {"intercept", "coverage", "leak_rate", "relative_stdev"};
    for (int j = 0; j < kP; ++j) {
        fit.coefficients[names[j]] = beta[j];
        double var = 0.0;
        for (int k = 0; k < kP; ++k) var += rinv[j][k] * rinv[j][k];
        fit.std_errors[names[j]] = std::sqrt(sigma2 * var);
    }
    if (sst > 0.0)
        fit.r2 = 1.0 - ssr / sst;
    else
        fit.r2 = ssr <= 1e-24 ? 1.0 : 0.0;
    fit.r2 = std::clamp(fit.r2, 0.0, 1.0);
    fit.adjusted_r2 = 1.0 - (1.0 - fit.r2) * (static_cast<double>(n) - 1.0) /
                                static_cast<double>(fit.df);
    fit.residual_std_error = std::sqrt(sigma2);
    const double kRegressors = kP - 1;
    fit.f_statistic = ssr > 0.0
                          ? ((sst - ssr) / kRegressors) / (ssr / static_cast<double>(fit.df))
                          : std::numeric_limits<double>::infinity();
    return fit;
}

} // namespace geoleak
