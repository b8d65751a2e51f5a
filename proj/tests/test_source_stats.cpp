#include <cmath>
#include <numeric>

#include "doctest.h"
#include "pdqkd/source_stats.hpp"

using namespace pdqkd;

// Frozen references from tools/oracle.py at the default source
// (mu1 = 0.5, mu2 = 1e-4, t = 0.5, eta_d = 0.12, eps = 3.2e-7).

namespace {
const double kPTotal[6] = {0.77877157855920655, 0.19471236405094766,
                           0.024351213888340808, 0.0020310934463691380,
                           0.00012710821944362529, 6.3661979916646567e-6};
const double kPNoclick[6] = {0.75574849250629297, 0.18895828416483500,
                             0.023631877665632209, 0.0019711184372505149,
                             0.00012335638726691261, 6.1783616549826238e-6};
}  // namespace

TEST_SUITE("source-stats") {

TEST_CASE("derived quantities at the default source") {
    const DerivedSourceParams d = derive({});
    CHECK(d.nu == doctest::Approx(0.5001).epsilon(1e-15));
    CHECK(d.xi == doctest::Approx(0.0070710678118654752).epsilon(1e-15));
    CHECK(d.w_a == doctest::Approx(0.25005).epsilon(1e-15));
    CHECK(d.w_b == doctest::Approx(0.25005).epsilon(1e-15));
    for (double th = 0.0; th < 6.3; th += 0.37) {
        const double g = gamma_fraction(d, th);
        CHECK(g >= 0.0);
        CHECK(g <= 1.0);
    }
}

TEST_CASE("per-order probabilities match the independent references") {
    const SourceParams p{};
    for (int n = 0; n < 6; ++n) {
        CAPTURE(n);
        CHECK(p_total(n, p) == doctest::Approx(kPTotal[n]).epsilon(1e-12));
        CHECK(p_noclick(n, p) == doctest::Approx(kPNoclick[n]).epsilon(1e-12));
        CHECK(p_click(n, p) ==
              doctest::Approx(kPTotal[n] - kPNoclick[n]).epsilon(1e-9));
    }
    CHECK(joint_prob(0, 0, p) == doctest::Approx(0.60647000967921437).epsilon(1e-12));
    CHECK(joint_prob(1, 1, p) == doctest::Approx(0.037904377121125923).epsilon(1e-12));
    CHECK(joint_prob(2, 1, p) == doctest::Approx(0.0047389947495687685).epsilon(1e-12));
    CHECK(noclick_aggregate(p) ==
          doctest::Approx(0.97043957503116731).epsilon(1e-13));
}

TEST_CASE("build_stats honors the tail-mass contract at the default source") {
    const PhotonNumberStats st = build_stats({}, 1e-9);
    CHECK(st.n_cut == 7);
    const double total =
        std::accumulate(st.p_total.begin(), st.p_total.end(), 0.0);
    CHECK(total >= 1.0 - 1e-9);
    CHECK(st.tail_total <= 1e-9);
    CHECK(st.tail_total >= 0.0);
    CHECK(st.P_noclick == doctest::Approx(0.97043957503116731).epsilon(1e-13));
    CHECK(st.P_click == doctest::Approx(1.0 - st.P_noclick).epsilon(1e-15));
    // the truncated no-click series can undershoot the aggregate only by tail
    const double series_nc =
        std::accumulate(st.p_noclick.begin(), st.p_noclick.end(), 0.0);
    CHECK(series_nc <= st.P_noclick + 1e-12);
    CHECK(series_nc >= st.P_noclick - st.tail_total - 1e-12);
}

TEST_CASE("tag split is additive and nonnegative across random sources") {
    SplitMix64 rng(2024, 1);
    for (int i = 0; i < 50; ++i) {
        SourceParams p;
        p.mu1 = rng.uniform(0.1, 1.0);
        p.mu2 = rng.uniform(1e-5, 1e-2);
        p.t = rng.uniform(0.1, 0.9);
        p.eta_d = rng.uniform(0.05, 1.0);
        p.eps_dark = rng.uniform(0.0, 1e-3);
        CAPTURE(p.mu1);
        CAPTURE(p.mu2);
        const PhotonNumberStats st = build_stats(p, 1e-9);
        for (int n = 0; n <= st.n_cut; ++n) {
            CHECK(st.p_click[n] >= 0.0);
            CHECK(st.p_noclick[n] >= 0.0);
            CHECK(std::fabs(st.p_click[n] + st.p_noclick[n] - st.p_total[n]) <=
                  1e-12);
        }
        CHECK(st.P_noclick >= 0.0);
        CHECK(st.P_noclick <= 1.0);
    }
}

TEST_CASE("build_stats_fixed aligns arrays to the requested order") {
    const PhotonNumberStats st = build_stats_fixed({}, 11);
    CHECK(st.n_cut == 11);
    CHECK(st.p_total.size() == 12);
    CHECK(st.p_click.size() == 12);
    CHECK_THROWS_AS(build_stats_fixed({}, 1), domain_error);
    CHECK_THROWS_AS(build_stats_fixed({}, 257), domain_error);
}

TEST_CASE("degenerate and invalid sources are rejected or handled") {
    SourceParams p;
    p.mu1 = -0.1;
    CHECK_THROWS_AS(p.validate(), domain_error);
    p = {};
    p.mu1 = 0.0;
    p.mu2 = 0.0;
    CHECK_THROWS_AS(p.validate(), domain_error);
    p = {};
    p.t = 1.5;
    CHECK_THROWS_AS(p.validate(), domain_error);
    p = {};
    p.eps_dark = 1.0;
    CHECK_THROWS_AS(p.validate(), domain_error);

    // mu2 = 0 kills the interference term: xi = 0 and both per-order
    // distributions stay valid (the estimator, not this module, rejects
    // the resulting proportionality)
    p = {};
    p.mu2 = 0.0;
    const DerivedSourceParams d = derive(p);
    CHECK(d.xi == 0.0);
    const PhotonNumberStats st = build_stats(p, 1e-9);
    for (int n = 0; n <= st.n_cut; ++n) CHECK(st.p_click[n] >= 0.0);

    // a dark-count-dominated tag still yields a proper split
    p = {};
    p.eps_dark = 1.0 - 1e-15;
    const PhotonNumberStats dark = build_stats(p, 1e-9);
    CHECK(dark.P_noclick <= 1e-14);
    for (int n = 0; n <= dark.n_cut; ++n)
        CHECK(dark.p_noclick[n] <= dark.p_total[n] + 1e-15);

    QuadratureSpec q;
    q.node_count = 8;
    CHECK_THROWS_AS(build_stats({}, 1e-9, 64, q), domain_error);
}

TEST_CASE("tail mass outside the accepted range is rejected") {
    CHECK_THROWS_AS(build_stats({}, 0.0), domain_error);
    CHECK_THROWS_AS(build_stats({}, 1e-5), domain_error);
    // an absurdly small hard cap cannot reach the tail target
    CHECK_THROWS_AS(build_stats({}, 1e-9, 2), truncation_error);
}

}  // TEST_SUITE
