#include "geoleak/poi_metrics.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

using namespace geoleak;

namespace {

POI poi(int id, double lat, double lon, TimestampMs dwell_ms = 0) {
    POI p;
    p.poi_id = id;
    p.user_id = "u1";
    p.centroid = {lat, lon};
    p.dwell_time_ms = dwell_ms;
    return p;
}

constexpr double kLatMeter = 1.0 / 111194.92664455874; // degrees per meter, small offsets

using Mat4 = std::array<std::array<double, 4>, 4>;

// Gauss-Jordan inverse with partial pivoting; the reference path.
Mat4 invert(Mat4 a) {
    Mat4 inv{};
    for (int i = 0; i < 4; ++i) inv[i][i] = 1.0;
    for (int c = 0; c < 4; ++c) {
        int pivot = c;
        for (int r = c + 1; r < 4; ++r)
            if (std::abs(a[r][c]) > std::abs(a[pivot][c])) pivot = r;
        if (std::abs(a[pivot][c]) < 1e-12) throw std::runtime_error("singular");
        std::swap(a[c], a[pivot]);
        std::swap(inv[c], inv[pivot]);
        const double d = a[c][c];
        for (int k = 0; k < 4; ++k) {
            a[c][k] /= d;
            inv[c][k] /= d;
        }
        for (int r = 0; r < 4; ++r) {
            if (r == c) continue;
            const double f = a[r][c];
            for (int k = 0; k < 4; ++k) {
                a[r][k] -= f * a[c][k];
                inv[r][k] -= f * inv[c][k];
            }
        }
    }
    return inv;
}

struct OracleFit {
    std::array<double, 4> beta;
    std::array<double, 4> se;
    double r2, adjusted_r2, f_statistic, residual_std_error;
};

// Independent OLS oracle via normal equations: beta = (X'X)^-1 X'y.
OracleFit normal_equations_fit(const std::vector<RegressionRow>& rows) {
    const std::size_t n = rows.size();
    auto xval = [&](std::size_t i, int j) {
        switch (j) {
            case 0: return 1.0;
            case 1: return rows[i].coverage;
            case 2: return rows[i].leak_rate;
            default: return rows[i].relative_stdev;
        }
    };
    Mat4 xtx{};
    std::array<double, 4> xty{};
    for (std::size_t i = 0; i < n; ++i) {
        for (int a = 0; a < 4; ++a) {
            xty[a] += xval(i, a) * rows[i].weighted_discovery;
            for (int b = 0; b < 4; ++b) xtx[a][b] += xval(i, a) * xval(i, b);
        }
    }
    const Mat4 inv = invert(xtx);
    OracleFit fit{};
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) fit.beta[a] += inv[a][b] * xty[b];

    double ssr = 0.0, sst = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += rows[i].weighted_discovery;
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double pred = 0.0;
        for (int a = 0; a < 4; ++a) pred += fit.beta[a] * xval(i, a);
        ssr += (rows[i].weighted_discovery - pred) * (rows[i].weighted_discovery - pred);
        sst += (rows[i].weighted_discovery - mean) * (rows[i].weighted_discovery - mean);
    }
    const double df = static_cast<double>(n) - 4.0;
    const double sigma2 = ssr / df;
    for (int a = 0; a < 4; ++a) fit.se[a] = std::sqrt(sigma2 * inv[a][a]);
    fit.r2 = 1.0 - ssr / sst;
    fit.adjusted_r2 = 1.0 - (1.0 - fit.r2) * (static_cast<double>(n) - 1.0) / df;
    fit.residual_std_error = std::sqrt(sigma2);
    fit.f_statistic = ((sst - ssr) / 3.0) / (ssr / df);
    return fit;
}

bool close_rel(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

std::vector<RegressionRow> random_rows(testutil::TestRng& rng, std::size_t n,
                                       const std::array<double, 4>& beta, double noise_amp) {
    std::vector<RegressionRow> rows;
    for (std::size_t i = 0; i < n; ++i) {
        RegressionRow r;
        r.coverage = rng.real01();
        r.leak_rate = rng.real(0.0, 5.0);
        r.relative_stdev = rng.real(0.0, 3.0);
        r.weighted_discovery = beta[0] + beta[1] * r.coverage + beta[2] * r.leak_rate +
                               beta[3] * r.relative_stdev + rng.real(-noise_amp, noise_amp);
        rows.push_back(r);
    }
    return rows;
}

const char* kCoefNames[4] = {"intercept", "coverage", "leak_rate", "relative_stdev"};

} // namespace

TEST_CASE("matching is globally nearest first, one to one") {
    // T1-A0 is the closest pair; taking it forces T0 onto A1 even though A0
    // is T0's nearest. A per-traffic greedy would pair (T0,A0),(T1,A1).
    const std::vector<POI> traffic{poi(0, 31.5, 35.0), poi(1, 31.5 + 120 * kLatMeter, 35.0)};
    const std::vector<POI> agent{poi(0, 31.5 + 100 * kLatMeter, 35.0),
                                 poi(1, 31.5 + 200 * kLatMeter, 35.0)};
    const auto match = match_pois(traffic, agent, 500.0);
    REQUIRE(match.pairs.size() == 2);
    CHECK(match.pairs[0].traffic_poi_id == 1);
    CHECK(match.pairs[0].agent_poi_id == 0);
    CHECK(match.pairs[0].distance_m == doctest::Approx(20.0).epsilon(0.05));
    CHECK(match.pairs[1].traffic_poi_id == 0);
    CHECK(match.pairs[1].agent_poi_id == 1);
    CHECK(match.unmatched_traffic.empty());
    CHECK(match.unmatched_agent.empty());
}

TEST_CASE("matching respects the distance cutoff") {
    const std::vector<POI> traffic{poi(0, 31.5, 35.0), poi(7, 32.5, 35.0)};
    const std::vector<POI> agent{poi(3, 31.5 + 400 * kLatMeter, 35.0), poi(4, 33.2, 35.0)};
    const auto match = match_pois(traffic, agent, 500.0);
    REQUIRE(match.pairs.size() == 1);
    CHECK(match.pairs[0].traffic_poi_id == 0);
    CHECK(match.pairs[0].agent_poi_id == 3);
    CHECK(match.unmatched_traffic == std::vector<int>{7});
    CHECK(match.unmatched_agent == std::vector<int>{4});

    CHECK(match_pois({}, agent, 500.0).pairs.empty());
    CHECK(match_pois(traffic, {}, 500.0).unmatched_traffic.size() == 2);
}

TEST_CASE("matching never double-books either side") {
    testutil::TestRng rng(31337);
    for (int inst = 0; inst < 50; ++inst) {
        std::vector<POI> traffic, agent;
        const int nt = static_cast<int>(rng.below(12));
        const int na = static_cast<int>(rng.below(12));
        for (int i = 0; i < nt; ++i)
            traffic.push_back(poi(i, 31.5 + rng.real(0, 2000) * kLatMeter, 35.0));
        for (int i = 0; i < na; ++i)
            agent.push_back(poi(i, 31.5 + rng.real(0, 2000) * kLatMeter, 35.0));
        const auto match = match_pois(traffic, agent, 300.0);

        std::set<int> t_used, a_used;
        for (const auto& p : match.pairs) {
            CHECK(p.distance_m <= 300.0);
            CHECK(t_used.insert(p.traffic_poi_id).second);
            CHECK(a_used.insert(p.agent_poi_id).second);
        }
        CHECK(match.pairs.size() + match.unmatched_traffic.size() == traffic.size());
        CHECK(match.pairs.size() + match.unmatched_agent.size() == agent.size());
    }
}

TEST_CASE("precision and recall arithmetic") {
    // Published-ratio fixture: 205 matches out of 282 identified POIs against
    // a 1,053-POI benchmark.
    MatchResult match;
    for (int i = 0; i < 205; ++i) match.pairs.push_back({i, i, 10.0});
    for (int i = 205; i < 282; ++i) match.unmatched_traffic.push_back(i);

    const auto score = precision_recall(match, 1053);
    CHECK(score.total == 282);
    CHECK(score.true_positive == 205);
    CHECK(std::abs(score.precision - 0.727) <= 0.005);
    CHECK(std::abs(score.recall - 0.195) <= 0.005);

    const auto empty = precision_recall(MatchResult{}, 0);
    CHECK(empty.precision == 0.0);
    CHECK(empty.recall == 0.0);
    CHECK_THROWS_AS(precision_recall(MatchResult{}, -1), std::invalid_argument);
}

TEST_CASE("poi weights follow relative dwell") {
    const std::vector<POI> bench{poi(0, 31.5, 35.0, 3 * kMsPerHour),
                                 poi(1, 31.6, 35.0, kMsPerHour)};
    const auto weights = poi_weights(bench);
    CHECK(weights.at(0) == doctest::Approx(0.75));
    CHECK(weights.at(1) == doctest::Approx(0.25));

    const auto uniform = poi_weights({poi(3, 31.5, 35.0, 0), poi(9, 31.6, 35.0, 0)});
    CHECK(uniform.at(3) == doctest::Approx(0.5));
    CHECK(uniform.at(9) == doctest::Approx(0.5));
    CHECK(poi_weights({}).empty());

    testutil::TestRng rng(91);
    std::vector<POI> many;
    for (int i = 0; i < 17; ++i)
        many.push_back(poi(i, 31.5, 35.0, rng.range(1, 100000)));
    double sum = 0.0;
    for (const auto& [id, w] : poi_weights(many)) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("weighted discovery sums matched benchmark weights") {
    MatchResult match;
    match.pairs.push_back({0, 2, 5.0});
    match.pairs.push_back({1, 0, 5.0});
    const std::map<int, double> weights{{0, 0.5}, {1, 0.3}, {2, 0.2}};
    CHECK(weighted_discovery(match, weights) == doctest::Approx(0.7));
    CHECK(weighted_discovery(MatchResult{}, weights) == 0.0);
}

TEST_CASE("regression matches the normal-equations oracle") {
    testutil::TestRng rng(60601);
    for (int inst = 0; inst < 40; ++inst) {
        const std::array<double, 4> beta{rng.real(-1, 1), rng.real(-2, 2), rng.real(-2, 2),
                                         rng.real(-2, 2)};
        const auto rows = random_rows(rng, rng.below(196) + 5, beta, 0.2);
        RegressionFit fit;
        OracleFit want;
        try {
            fit = fit_exposure_regression(rows);
            want = normal_equations_fit(rows);
        } catch (const std::exception&) {
            continue; // a near-singular draw; both paths refuse it
        }
        for (int j = 0; j < 4; ++j) {
            CHECK_MESSAGE(close_rel(fit.coefficients.at(kCoefNames[j]), want.beta[j], 1e-6),
                          "coefficient " << kCoefNames[j]);
            CHECK_MESSAGE(close_rel(fit.std_errors.at(kCoefNames[j]), want.se[j], 1e-6),
                          "std error " << kCoefNames[j]);
        }
        CHECK(close_rel(fit.r2, want.r2, 1e-9));
        CHECK(close_rel(fit.adjusted_r2, want.adjusted_r2, 1e-9));
        CHECK(close_rel(fit.f_statistic, want.f_statistic, 1e-6));
        CHECK(close_rel(fit.residual_std_error, want.residual_std_error, 1e-9));
        CHECK(fit.df == static_cast<std::int64_t>(rows.size()) - 4);
    }
}

TEST_CASE("regression recovers planted coefficients from low-noise rows") {
    testutil::TestRng rng(2222);
    const std::array<double, 4> beta{0.597, 0.559, -0.13, -0.048};
    const auto rows = random_rows(rng, 150, beta, 1e-5);
    const auto fit = fit_exposure_regression(rows);
    for (int j = 0; j < 4; ++j)
        CHECK(std::abs(fit.coefficients.at(kCoefNames[j]) - beta[j]) < 1e-3);
}

TEST_CASE("regression residuals are orthogonal to the design") {
    testutil::TestRng rng(3333);
    const auto rows = random_rows(rng, 80, {0.4, 0.8, -0.2, 0.1}, 0.3);
    const auto fit = fit_exposure_regression(rows);
    double resid_norm = 0.0;
    std::array<double, 4> dot{};
    for (const auto& r : rows) {
        const double pred = fit.coefficients.at("intercept") +
                            fit.coefficients.at("coverage") * r.coverage +
                            fit.coefficients.at("leak_rate") * r.leak_rate +
                            fit.coefficients.at("relative_stdev") * r.relative_stdev;
        const double e = r.weighted_discovery - pred;
        resid_norm += e * e;
        dot[0] += e;
        dot[1] += e * r.coverage;
        dot[2] += e * r.leak_rate;
        dot[3] += e * r.relative_stdev;
    }
    resid_norm = std::sqrt(resid_norm);
    for (int j = 0; j < 4; ++j) CHECK(std::abs(dot[j]) <= 1e-8 * std::max(1.0, resid_norm * 80));
}

TEST_CASE("regression on an exact-fit design reports r2 of one") {
    testutil::TestRng rng(4444);
    const auto rows = random_rows(rng, 40, {0.2, 0.5, 0.05, -0.3}, 0.0);
    const auto fit = fit_exposure_regression(rows);
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.residual_std_error == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("regression input validation") {
    testutil::TestRng rng(5555);
    CHECK_THROWS_AS(fit_exposure_regression(random_rows(rng, 4, {0, 1, 1, 1}, 0.1)),
                    std::invalid_argument);

    // Collinear design: leak_rate duplicates coverage.
    auto rows = random_rows(rng, 30, {0.1, 0.6, 0.0, 0.2}, 0.1);
    for (auto& r : rows) r.leak_rate = r.coverage;
    CHECK_THROWS_AS(fit_exposure_regression(rows), std::runtime_error);

    // Constant regressor column duplicates the intercept.
    auto rows2 = random_rows(rng, 30, {0.1, 0.6, 0.0, 0.2}, 0.1);
    for (auto& r : rows2) r.relative_stdev = 2.0;
    CHECK_THROWS_AS(fit_exposure_regression(rows2), std::runtime_error);
}
