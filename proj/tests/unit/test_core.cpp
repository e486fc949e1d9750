#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "odpa/core.hpp"
#include "odpa/dpa.hpp"

using namespace odpa;

namespace {

bool has_code(const std::vector<Violation>& v, const std::string& code) {
    return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.code == code; });
}

// Midpoint quadrature of a density over [a, b].
template <class F>
double integrate(F f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += f(a + (k + 0.5) * h);
    return s * h;
}

}  // namespace

TEST_CASE("attitude presets") {
    CHECK(AttitudeParams::preset("blue") == AttitudeParams{0.15, 0.20, 0.30, 0.40});
    CHECK(AttitudeParams::preset("black") == AttitudeParams{0.25, 0.34, 0.36, 0.65});
    CHECK(AttitudeParams::preset("red") == AttitudeParams{0.30, 0.45, 0.55, 0.70});
    CHECK(AttitudeParams::preset("olive") == AttitudeParams{0.40, 0.80, 1.20, 1.60});
    CHECK_FALSE(AttitudeParams::preset("green").has_value());
}

TEST_CASE("default random scenario is valid") {
    const auto s = testing_helpers::black_scenario();
    CHECK(validate(s).empty());
    const auto r = realize(s);
    CHECK(r.agents.size() == 40);
    CHECK_FALSE(r.random_agents.has_value());
    CHECK(validate(r).empty());
}

TEST_CASE("validation reports each violated invariant") {
    auto s = testing_helpers::two_agent_scenario(8);
    s.agents[0].mass = -1.0;
    s.agents[1].density = GaussianDensity{1.5, 0.0};
    s.agents[1].position = {1.0};
    s.interaction_radius = 0.0;
    s.run.n_particles = 1;
    s.run.dt = 0.0;
    s.run.min_gap = 0.0;
    s.network_velocity_sign = 0;
    const auto v = validate(s);
    CHECK(has_code(v, "nonpositive_mass"));
    CHECK(has_code(v, "density_mean_out_of_range"));
    CHECK(has_code(v, "nonpositive_variance"));
    CHECK(has_code(v, "nonpositive_radius"));
    CHECK(has_code(v, "too_few_particles"));
    CHECK(has_code(v, "nonpositive_dt"));
    CHECK(has_code(v, "nonpositive_min_gap"));
    CHECK(has_code(v, "velocity_sign"));
    CHECK(std::any_of(v.begin(), v.end(), [](const Violation& x) { return x.field == "agents[1].position"; }));
}

TEST_CASE("tabulated density must be positive and cover the domain") {
    auto s = testing_helpers::two_agent_scenario(8);
    s.agents[0].density = TabulatedDensity{{-0.5, 1.0}, {1.0, 1.0}};
    s.agents[1].density = TabulatedDensity{{-1.0, 0.0, 1.0}, {1.0, 0.0, 1.0}};
    const auto v = validate(s);
    CHECK(has_code(v, "table_does_not_cover_domain"));
    CHECK(has_code(v, "density_lower_bound"));
}

TEST_CASE("zero final time is allowed, negative is not") {
    auto s = testing_helpers::two_agent_scenario(8);
    s.run.t_final = 0.0;
    CHECK(validate(s).empty());
    s.run.t_final = -1.0;
    CHECK(has_code(validate(s), "negative_final_time"));
}

TEST_CASE("power diffusion without clamp is rejected") {
    auto s = testing_helpers::two_agent_scenario(8);
    s.phi.kind = PhiSpec::Kind::Power;
    s.phi.exponent = 2.0;
    CHECK(has_code(validate(s), "phi_not_lipschitz"));
    s.phi.rho_max = 5.0;
    CHECK(validate(s).empty());
}

TEST_CASE("random initial conditions are reproducible and respect ranges") {
    auto s = testing_helpers::black_scenario(5.0, 7);
    const auto a = sample_initial_conditions(s, 7);
    const auto b = sample_initial_conditions(s, 7);
    const auto c = sample_initial_conditions(s, 8);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    for (const auto& agent : a) {
        const auto& g = std::get<GaussianDensity>(agent.density);
        CHECK(g.mean >= -0.7);
        CHECK(g.mean <= 0.7);
        CHECK(g.variance >= 0.07);
        CHECK(g.variance <= 0.15);
        REQUIRE(agent.position.size() == 2);
        for (double p : agent.position) {
            CHECK(p >= 0.0);
            CHECK(p <= 10.0);
        }
        CHECK(agent.mass == 1.0);
    }
}

TEST_CASE("truncated gaussian integrates to the agent mass") {
    const InitialDensity d(GaussianDensity{0.3, 0.1}, 1.7);
    const double total = integrate([&](double x) { return d.value(x); }, -1.0, 1.0, 200000);
    CHECK(total == doctest::Approx(1.7).epsilon(1e-9));
    CHECK(d.cumulative(-1.0) == doctest::Approx(0.0));
    CHECK(d.cumulative(1.0) == doctest::Approx(1.7).epsilon(1e-14));
    const double half = integrate([&](double x) { return d.value(x); }, -1.0, 0.2, 200000);
    CHECK(d.cumulative(0.2) == doctest::Approx(half).epsilon(1e-9));
    // The variance field is that of the untruncated Gaussian.
    const double ratio = d.value(0.3 + std::sqrt(0.1)) / d.value(0.3);
    CHECK(ratio == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK(d.lower_bound() == doctest::Approx(d.value(-1.0)));
    CHECK(d.upper_bound() == doctest::Approx(d.value(0.3)));
}

TEST_CASE("tabulated density is renormalized to the agent mass") {
    const InitialDensity d(TabulatedDensity{{-1.0, 0.0, 1.0}, {1.0, 3.0, 1.0}}, 2.0);
    const double total = integrate([&](double x) { return d.value(x); }, -1.0, 1.0, 200000);
    CHECK(total == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(d.cumulative(0.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(d.lower_bound() == doctest::Approx(0.5));
    CHECK(d.upper_bound() == doctest::Approx(1.5));
}

TEST_CASE("initial state places particles on the quantile partition") {
    const auto s = testing_helpers::two_agent_scenario(16);
    const auto st = initial_state(s);
    CHECK(st.n_agents == 2);
    CHECK(st.n_intervals == 16);
    CHECK(st.dim == 2);
    CHECK(st.sigma_N[1] == doctest::Approx(0.7 / 16));
    for (std::size_t i = 0; i < 2; ++i) {
        const auto x = st.opinions(i);
        CHECK(x.front() == -1.0);
        CHECK(x.back() == 1.0);
        for (std::size_t k = 0; k + 1 < x.size(); ++k) CHECK(x[k] < x[k + 1]);
    }
    CHECK(st.node_distance(0, 1) == doctest::Approx(std::sqrt(1.25)));
}
