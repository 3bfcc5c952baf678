#pragma once

#include "geoleak/clustering.hpp"

#include <map>
#include <string>
#include <vector>

namespace geoleak {

struct MatchResult {
    struct Pair {
        int traffic_poi_id = 0;
        int agent_poi_id = 0;
        double distance_m = 0.0;
    };
    std::vector<Pair> pairs;
    std::vector<int> unmatched_traffic;
    std::vector<int> unmatched_agent;
};

struct ScoreReport {
    std::int64_t total = 0;
    std::int64_t true_positive = 0;
    double precision = 0.0;
    double recall = 0.0;
    double weighted_discovery = 0.0;
};

struct RegressionFit {
    // Keys: intercept, coverage, leak_rate, relative_stdev.
    std::map<std::string, double> coefficients;
    std::map<std::string, double> std_errors;
    double r2 = 0.0;
    double adjusted_r2 = 0.0;
    double f_statistic = 0.0;
    double residual_std_error = 0.0;
    std::int64_t df = 0;
};

struct RegressionRow {
    double coverage = 0.0;
    double leak_rate = 0.0;
    double relative_stdev = 0.0;
    double weighted_discovery = 0.0; // dependent variable
};

/// One-to-one greedy matching, globally nearest first, of traffic POIs to
/// agent (benchmark) POIs within match_dist.
MatchResult match_pois(const std::vector<POI>& traffic_pois,
                       const std::vector<POI>& agent_pois, double match_dist_m);

/// TP = matched pairs; precision = TP / (TP + unmatched traffic);
/// recall = TP / benchmark size. weighted_discovery is left unset.
ScoreReport precision_recall(const MatchResult& match, std::int64_t benchmark_size);

/// Relative dwell weight per POI id: dwell_i / total dwell. All-zero dwell
/// falls back to uniform weights with a warning.
std::map<int, double> poi_weights(const std::vector<POI>& benchmark_pois);

/// Sum of benchmark weights over the matched agent POIs.
double weighted_discovery(const MatchResult& match, const std::map<int, double>& weights);

/// OLS with intercept of weighted_discovery on {coverage, leak_rate,
/// relative_stdev}; classical standard errors, R-squared measures and the
/// F-statistic against the intercept-only model. Needs n >= 5 rows and a
/// full-rank design.
RegressionFit fit_exposure_regression(const std::vector<RegressionRow>& rows);

} // namespace geoleak
