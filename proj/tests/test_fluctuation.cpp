#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "pdqkd/fluctuation.hpp"

using namespace pdqkd;

// Frozen references from tools/oracle.py (slice pipeline replicated in
// mpmath over the same double-precision lattice). Envelope and ratio
// values are checked at 1e-9; quantities downstream of the cancelling
// yield denominator at 2e-7 (see test_passive_estimator.cpp).
namespace {
constexpr double kStatsTol = 1e-9;
constexpr double kComposedTol = 2e-7;

FluctuationSpec spec_for(double delta) {
    FluctuationSpec s;
    s.delta_mu1 = delta;
    s.delta_mu2 = delta;
    return s;
}
}  // namespace

TEST_SUITE("fluctuation") {

TEST_CASE("zero half-width collapses to the passive pipeline exactly") {
    const FluctuationContext ctx =
        make_fluctuation_context({}, spec_for(0.0));
    ProtocolParams proto;
    for (double d : {1.0, 30.0, 50.0, 150.0}) {
        ChannelParams ch;
        ch.distance = d;
        const FluctuationResult f = fluctuation_pipeline(ctx, ch, proto);
        const PassiveResult p = passive_pipeline(ctx.nominal, ch, proto);
        CAPTURE(d);
        CHECK(f.collapsed_to_passive);
        CHECK(f.R == p.R);  // shared code path, bitwise
        CHECK(f.R_c == p.R_c);
        CHECK(f.R_nc == p.R_nc);
        CHECK(f.bounds.Y1c_L == p.bounds.Y1_L);
        CHECK(f.bounds.e1c_U == p.bounds.e1_U);
    }
    // the consistent set degenerates to the nominal statistics, bitwise
    const PhotonNumberStats fixed = build_stats_fixed({}, ctx.nominal.n_cut);
    REQUIRE(ctx.consistent.consistent_nodes.size() == 1);
    const PhotonNumberStats& node = ctx.consistent.consistent_nodes[0];
    for (int n = 0; n <= ctx.nominal.n_cut; ++n) {
        CHECK(node.p_total[n] == fixed.p_total[n]);
        CHECK(ctx.consistent.pc_L[n] == ctx.consistent.pc_U[n]);
        CHECK(ctx.consistent.pc_L[n] == fixed.p_click[n]);
    }
}

TEST_CASE("observation-consistent slice structure at delta = 0.02") {
    const SourceParams src{};
    const FluctuationContext ctx =
        make_fluctuation_context(src, spec_for(0.02));
    const ProbabilityIntervals& iv = ctx.consistent;
    CHECK(ctx.nominal.n_cut == 7);
    CHECK(iv.observation_constrained);
    REQUIRE(iv.consistent_nodes.size() == 42);

    const double lo2 = src.mu2 * (1.0 - 0.02), hi2 = src.mu2 * (1.0 + 0.02);
    const double lo1 = src.mu1 * (1.0 - 0.02), hi1 = src.mu1 * (1.0 + 0.02);
    CHECK(iv.consistent_nodes.front().params.mu2 == lo2);
    CHECK(iv.consistent_nodes[40].params.mu2 == hi2);
    // the nominal point sits on the contour by construction and is kept
    CHECK(iv.consistent_nodes.back().params.mu1 == src.mu1);
    CHECK(iv.consistent_nodes.back().params.mu2 == src.mu2);
    for (const auto& node : iv.consistent_nodes) {
        CHECK(node.params.mu1 >= lo1);
        CHECK(node.params.mu1 <= hi1);
        CHECK(node.params.mu2 >= lo2);
        CHECK(node.params.mu2 <= hi2);
        // every sampled point reproduces the observed no-click probability
        CHECK(std::fabs(node.P_noclick - ctx.Pnc_obs) <= 1e-12);
    }
    CHECK(std::fabs(iv.Pnc_L - 0.97043957503116731) <= 1e-12);
    CHECK(std::fabs(iv.Pnc_U - 0.97043957503116731) <= 1e-12);
    CHECK(iv.tail_upper > 0.0);
    CHECK(iv.tail_upper <= 1e-9);

    CHECK(iv.pc_L[0] == doctest::Approx(0.023023035653021937).epsilon(kStatsTol));
    CHECK(iv.pc_L[1] == doctest::Approx(0.0057540363338748505).epsilon(kStatsTol));
    CHECK(iv.pc_U[1] == doctest::Approx(0.0057541234386616368).epsilon(kStatsTol));
    CHECK(iv.pnc_L[0] == doctest::Approx(0.75574837161023192).epsilon(kStatsTol));
    CHECK(iv.pnc_L[1] == doctest::Approx(0.18895800459963376).epsilon(kStatsTol));
    CHECK(iv.pnc_U[1] == doctest::Approx(0.18895856373217262).epsilon(kStatsTol));

    CHECK(ctx.q.q0 == doctest::Approx(0.030463880773001297).epsilon(kStatsTol));
    CHECK(ctx.q.q1 == doctest::Approx(0.030451312818140097).epsilon(kStatsTol));
    CHECK(ctx.q.q2 == doctest::Approx(0.030438800324722813).epsilon(kStatsTol));
    CHECK(ctx.q.q_star == doctest::Approx(0.030370032066855245).epsilon(kStatsTol));
    CHECK(ctx.q.q1_dominates);
    CHECK(ctx.q.q2_below_q0);
}

TEST_CASE("worst-case pipeline at d = 30, delta = 0.02") {
    const FluctuationContext ctx =
        make_fluctuation_context({}, spec_for(0.02));
    ChannelParams ch;  // d = 30
    ProtocolParams proto;
    const FluctuationResult res = fluctuation_pipeline(ctx, ch, proto);
    CHECK_FALSE(res.vacuous);
    CHECK_FALSE(res.collapsed_to_passive);
    CHECK_FALSE(res.observation_inconsistent);
    CHECK_FALSE(res.bounds.e1_clamped);

    const DeltaBoundsClick db =
        delta_bounds_click(res.obs, ctx.consistent, ctx.q, ch.Y0);
    CHECK(db.Y1_worst ==
          doctest::Approx(0.0098890997592943495).epsilon(kComposedTol));
    // the conditional-gain chain clamps to zero here; the yield floor wins
    CHECK(db.chain_value == 0.0);
    CHECK(db.chain_applicable);
    CHECK(db.Delta1c_L == doctest::Approx(db.floor_value).epsilon(1e-15));
    CHECK(db.Delta1c_L ==
          doctest::Approx(0.73053919260919451).epsilon(kComposedTol));
    CHECK(db.Delta0c_L ==
          doctest::Approx(0.00050248797114254315).epsilon(kStatsTol));

    // candidate decomposition of the error bound
    const double c1 = e1_click_upper(res.obs, db.Delta1c_L, db.Delta0c_L);
    CHECK(c1 == doctest::Approx(0.045240625630988412).epsilon(kComposedTol));
    double c2w = 0.0, c3w = 0.0;
    for (const auto& node : ctx.consistent.consistent_nodes) {
        const E1Candidates c =
            e1_candidates(node, res.obs, ch.Y0, db.Y1_worst);
        c2w = std::max(c2w, c.c2);
        c3w = std::max(c3w, c.c3);
    }
    CHECK(c2w == doctest::Approx(0.045244911995496664).epsilon(kComposedTol));
    CHECK(c3w == doctest::Approx(0.057402230881187148).epsilon(kComposedTol));
    CHECK(res.bounds.e1c_U ==
          doctest::Approx(0.045240625630988412).epsilon(kComposedTol));

    CHECK(res.bounds.Y1c_L ==
          doctest::Approx(0.0098889500600508028).epsilon(kComposedTol));
    CHECK(res.bounds.Delta1nc_L ==
          doctest::Approx(0.73045902799373964).epsilon(kComposedTol));
    CHECK(res.bounds.Delta0nc_L ==
          doctest::Approx(0.00050223447953251378).epsilon(kStatsTol));
    CHECK(res.R_c == doctest::Approx(1.0897252979956189e-5).epsilon(kComposedTol));
    CHECK(res.R_nc == doctest::Approx(0.00035781635147657112).epsilon(kComposedTol));
    CHECK(res.R == doctest::Approx(0.00036871360445652731).epsilon(kComposedTol));

    // worst-casing can only hurt relative to the fluctuation-free bound
    const PassiveResult p = passive_pipeline(ctx.nominal, ch, proto);
    CHECK(res.R <= p.R);
    CHECK(res.bounds.Y1c_L <= p.bounds.Y1_L);
    CHECK(res.bounds.e1c_U >= p.bounds.e1_U);
}

TEST_CASE("worst-case pipeline at d = 50, delta = 0.10") {
    const FluctuationContext ctx =
        make_fluctuation_context({}, spec_for(0.10));
    REQUIRE(ctx.consistent.consistent_nodes.size() == 42);
    ChannelParams ch;
    ch.distance = 50.0;
    const FluctuationResult res = fluctuation_pipeline(ctx, ch, {});
    CHECK_FALSE(res.vacuous);

    CHECK(ctx.consistent.pc_L[1] ==
          doctest::Approx(0.0057538621280352261).epsilon(kStatsTol));
    CHECK(ctx.consistent.pc_U[1] ==
          doctest::Approx(0.0057542976519691278).epsilon(kStatsTol));
    CHECK(ctx.consistent.pnc_L[1] ==
          doctest::Approx(0.18895688636019270).epsilon(kStatsTol));
    CHECK(ctx.q.q_star ==
          doctest::Approx(0.030338841646477402).epsilon(kStatsTol));

    const DeltaBoundsClick db =
        delta_bounds_click(res.obs, ctx.consistent, ctx.q, ch.Y0);
    CHECK(db.Y1_worst ==
          doctest::Approx(0.0032927259437618672).epsilon(kComposedTol));
    CHECK(db.chain_value == 0.0);
    CHECK(res.bounds.Delta1c_L ==
          doctest::Approx(0.63858444571014599).epsilon(kComposedTol));
    CHECK(res.bounds.Delta0c_L ==
          doctest::Approx(0.0013192010966837578).epsilon(kStatsTol));
    CHECK(res.bounds.e1c_U ==
          doctest::Approx(0.051882575074041022).epsilon(kComposedTol));
    CHECK(res.bounds.Y1c_L ==
          doctest::Approx(0.0032924767281246128).epsilon(kComposedTol));
    CHECK(res.bounds.Delta1nc_L ==
          doctest::Approx(0.63849132184013330).epsilon(kComposedTol));
    CHECK(res.bounds.Delta0nc_L ==
          doctest::Approx(0.0013185464215998792).epsilon(kStatsTol));
    CHECK(res.R_c == doctest::Approx(2.8482985523798901e-6).epsilon(kComposedTol));
    CHECK(res.R_nc == doctest::Approx(9.3513300036296743e-5).epsilon(kComposedTol));
    CHECK(res.R == doctest::Approx(9.6361598588676633e-5).epsilon(kComposedTol));
}

TEST_CASE("box envelopes contain the statistics of every interior point") {
    FluctuationSpec spec = spec_for(0.05);
    spec.grid_per_axis = 9;
    const SourceParams src{};
    const ProbabilityIntervals iv = probability_intervals(src, spec, 7);
    CHECK_FALSE(iv.observation_constrained);
    CHECK(iv.consistent_nodes.empty());

    SplitMix64 rng(99, 5);
    for (int i = 0; i < 300; ++i) {
        SourceParams p = src;
        p.mu1 = rng.uniform(src.mu1 * 0.95, src.mu1 * 1.05);
        p.mu2 = rng.uniform(src.mu2 * 0.95, src.mu2 * 1.05);
        const PhotonNumberStats st = build_stats_fixed(p, 7);
        CAPTURE(p.mu1);
        CAPTURE(p.mu2);
        for (int n = 0; n <= 7; ++n) {
            CHECK(st.p_click[n] >= iv.pc_L[n] - 1e-12);
            CHECK(st.p_click[n] <= iv.pc_U[n] + 1e-12);
            CHECK(st.p_noclick[n] >= iv.pnc_L[n] - 1e-12);
            CHECK(st.p_noclick[n] <= iv.pnc_U[n] + 1e-12);
        }
        CHECK(st.P_noclick >= iv.Pnc_L - 1e-12);
        CHECK(st.P_noclick <= iv.Pnc_U + 1e-12);
    }
    // corners are lattice points, so monotone-in-intensity envelopes are
    // attained there, not merely approached
    SourceParams corner = src;
    corner.mu1 = src.mu1 * (1.0 + 0.05);  // the exact lattice corner
    corner.mu2 = src.mu2 * (1.0 + 0.05);
    const PhotonNumberStats hi = build_stats_fixed(corner, 7);
    CHECK(hi.P_noclick == doctest::Approx(iv.Pnc_L).epsilon(1e-14));

    const ProbabilityIntervals collapsed =
        probability_intervals(src, spec_for(0.0), 7);
    const PhotonNumberStats nominal = build_stats_fixed(src, 7);
    for (int n = 0; n <= 7; ++n) {
        CHECK(collapsed.pc_L[n] == nominal.p_click[n]);
        CHECK(collapsed.pc_U[n] == nominal.p_click[n]);
    }
}

TEST_CASE("conditional-gain chain on synthetic ratios") {
    // hand-built interval set: q0 = 0.5, q1 = 0.8, q2 = q_star = 0.6,
    // balanced tag split, rescale = 1
    ProbabilityIntervals iv;
    iv.n_cut = 2;
    iv.pc_L = {0.1, 0.16, 0.03};
    iv.pc_U = {0.2, 0.2, 0.1};
    iv.pnc_L = {0.15, 0.15, 0.04};
    iv.pnc_U = {0.2, 0.2, 0.05};
    iv.Pc_L = iv.Pc_U = 0.5;
    iv.Pnc_L = iv.Pnc_U = 0.5;
    iv.tail_upper = 0.001;
    const QRatios q = q_ratios(iv);
    CHECK(q.q0 == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(q.q1 == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(q.q_star == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(q.q1_dominates);  // q2 = 0.6 stays below q1 = 0.8
    CHECK(q.q2_below_q0 == false);

    Observables obs{0.03, 0.01, 0.02, 0.1, 0.1, 0.1};
    // gap = 0.02, multiphoton penalty = 0.0133…, tail penalty = 0.002;
    // the boundary error rate makes the vacuum penalty eat the rest
    const double gap = obs.Q_nc / 0.5 - obs.Q_c / 0.5;
    const double multi = (1.0 / 0.6 - 1.0) * obs.Q_c / 0.5;
    const double tail = 0.001 / 0.5;
    const double ec_boundary = (gap - multi - tail) / (0.04);

    bool applicable = false;
    obs.E_c = ec_boundary + 1e-9;  // just past the boundary: clamps to 0
    CHECK(chain_delta1_click(obs, iv, q, &applicable) == 0.0);
    CHECK(applicable);

    obs.E_c = ec_boundary - 1e-3;  // strictly inside: positive bound
    const double expected = (0.04 * 1e-3) / (1.0 / 0.8 - 1.0) * 0.5 / obs.Q_c;
    CHECK(chain_delta1_click(obs, iv, q, &applicable) ==
          doctest::Approx(expected).epsilon(1e-9));
    CHECK(applicable);

    obs.E_c = 0.0;
    obs.Q_nc = 0.5;  // huge gap: bound saturates the [0,1] clamp
    CHECK(chain_delta1_click(obs, iv, q) == 1.0);

    // q1 at or above 1 makes the chain inapplicable rather than wrong
    ProbabilityIntervals flat = iv;
    flat.pc_L[1] = 0.2;
    const QRatios qflat = q_ratios(flat);
    obs = {0.03, 0.01, 0.02, 0.1, 0.1, 0.1};
    CHECK(chain_delta1_click(obs, flat, qflat, &applicable) == 0.0);
    CHECK_FALSE(applicable);

    // clicks must be the rare tag
    ProbabilityIntervals inverted = iv;
    inverted.pc_L[0] = 0.25;
    const QRatios qi = q_ratios(inverted);
    CHECK_THROWS_AS(chain_delta1_click(obs, inverted, qi), convention_error);

    ProbabilityIntervals degenerate = iv;
    degenerate.Pc_L = 0.0;
    CHECK_THROWS_AS(chain_delta1_click(obs, degenerate, q), degenerate_error);
}

TEST_CASE("q_ratios rejects unusable intervals") {
    ProbabilityIntervals empty;
    CHECK_THROWS_AS(q_ratios(empty), degenerate_error);
    ProbabilityIntervals zero;
    zero.n_cut = 2;
    zero.pc_L = {0.1, 0.1, 0.1};
    zero.pnc_U = {0.2, 0.0, 0.2};
    CHECK_THROWS_AS(q_ratios(zero), degenerate_error);
}

TEST_CASE("estimator variants relax the bounds in the documented direction") {
    const FluctuationContext ctx =
        make_fluctuation_context({}, spec_for(0.02));
    ChannelParams ch;  // d = 30
    const FluctuationResult sound = fluctuation_pipeline(ctx, ch, {});

    const DeltaBoundsClick db =
        delta_bounds_click(sound.obs, ctx.consistent, ctx.q, ch.Y0);
    const TransferBounds lit = transfer_to_noclick(
        sound.obs, ctx.consistent, db.Delta1c_L, db.Delta0c_L, ch.Y0, true);
    CHECK(lit.Delta1nc_L > sound.bounds.Delta1nc_L);  // pnc_U[1] > pnc_L[1]

    const double full = e1_click_upper(sound.obs, db.Delta1c_L, db.Delta0c_L);
    const double simp =
        e1_click_upper(sound.obs, db.Delta1c_L, db.Delta0c_L, true);
    CHECK(simp > full);
    CHECK_THROWS_AS(e1_click_upper(sound.obs, 0.0, db.Delta0c_L),
                    undefined_bound_error);

    // rate clamping: a dead class contributes 0, not a negative credit
    FluctuationBounds dead;
    dead.e1c_U = 1.0;
    const FluctRates clamped = rates_with_fluctuation(sound.obs, dead, {});
    const FluctRates raw = rates_with_fluctuation(sound.obs, dead, {}, true);
    CHECK(clamped.R == 0.0);
    CHECK(raw.R < 0.0);
    CHECK(raw.R == doctest::Approx(raw.R_c + raw.R_nc).epsilon(1e-15));

    EstimatorVariants v;
    v.literal_transfer_numerator = true;
    const FluctuationResult rlit = fluctuation_pipeline(ctx, ch, {}, v);
    CHECK(rlit.R >= sound.R);
}

TEST_CASE("an observation incompatible with the declared box is flagged") {
    FluctuationContext ctx = make_fluctuation_context({}, spec_for(0.02));
    // no intensity in the box reaches a no-click probability of 0.5
    ctx.consistent = consistent_intervals({}, spec_for(0.02),
                                          ctx.nominal.n_cut, 0.5);
    CHECK(ctx.consistent.empty());
    CHECK(ctx.consistent.observation_constrained);
    const FluctuationResult res = fluctuation_pipeline(ctx, ChannelParams{}, {});
    CHECK(res.observation_inconsistent);
    CHECK(res.vacuous);
    CHECK(res.R == 0.0);
}

TEST_CASE("spec validation and range advisories") {
    FluctuationSpec s;
    s.delta_mu1 = 0.5;
    CHECK_THROWS_AS(s.validate(), domain_error);
    s = {};
    s.grid_per_axis = 1;
    CHECK_THROWS_AS(s.validate(), domain_error);
    s = {};
    s.slice_grid = 2;
    CHECK_THROWS_AS(s.validate(), domain_error);
    s = {};
    s.delta_mu1 = 0.10;
    CHECK_FALSE(s.exceeds_studied_range());
    s.delta_mu1 = 0.11;
    CHECK(s.exceeds_studied_range());
}

}  // TEST_SUITE
