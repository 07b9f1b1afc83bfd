#include <catch2/catch.hpp>
#include <cmath>

#include "rkhsid/convolution.hpp"
#include "rkhsid/random.hpp"
#include "rkhsid/simulate.hpp"
#include "support/oracles.hpp"

using namespace rkhsid;

namespace {

RkhsElement random_element(const KernelDescriptor& k, Rng& rng, int n_atoms, double t_hi = 30.0) {
    std::vector<Atom> atoms;
    for (int i = 0; i < n_atoms; ++i) {
        const double c = k.domain() == TimeDomain::Discrete
                             ? static_cast<double>(rng.integer(0, static_cast<std::int64_t>(t_hi)))
                             : rng.uniform(0.0, t_hi);
        atoms.push_back({rng.uniform(-1.0, 1.0), c});
    }
    return RkhsElement(k, std::move(atoms));
}

}  // namespace

TEST_CASE("unit impulse sifts", "[convolution]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 0.5);
    const Signal u = Signal::discrete(0, {1.0});
    Rng rng(5);
    const auto g = random_element(k, rng, 8);
    CHECK(convolve(u, 3, g) == g.evaluate(3));
    CHECK(convolve(u, 0, g) == g.evaluate(0));
}

TEST_CASE("wide constant input approximates the dc gain", "[convolution]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 0.5);
    const Signal ones = Signal::discrete(-80, std::vector<double>(161, 1.0));  // [-80, 80]
    Rng rng(9);
    const auto g = random_element(k, rng, 6, 10.0);
    const double tau = 10.0;
    long double direct = 0.0L;
    for (std::int64_t s = 0; s <= 90; ++s) direct += g.evaluate(static_cast<double>(s));
    CHECK(convolve(ones, tau, g) == Approx(static_cast<double>(direct)).margin(1e-12));
}

TEST_CASE("the functional is linear", "[convolution]") {
    const auto k = KernelDescriptor::dc(0.7, -0.2);
    Rng rng(13);
    const Signal u = make_input(InputKind::UniformRandom, {.length = 40}, 3);
    for (int rep = 0; rep < 20; ++rep) {
        const auto e1 = random_element(k, rng, 7);
        const auto e2 = random_element(k, rng, 5);
        const double lhs = convolve(u, 12, e1 + e2);
        const double rhs = convolve(u, 12, e1) + convolve(u, 12, e2);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(rhs)));
    }
}

TEST_CASE("impulse input representer is the kernel section", "[convolution]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 0.5);
    const Signal u = Signal::discrete(0, {1.0});
    const auto rep = representer_phi(k, u, 4.0);
    REQUIRE(rep.element.atoms().size() == 1);
    CHECK(rep.element.atoms()[0].weight == 1.0);
    CHECK(rep.element.atoms()[0].center == 4.0);
    CHECK(rep.tail_bound == 0.0);
    for (std::int64_t t = 0; t <= 10; ++t)
        CHECK(rep.element.evaluate(static_cast<double>(t)) ==
              k.eval(static_cast<double>(t), 4.0));
    CHECK(operator_norm(rep) == Approx(std::sqrt(k.eval(4, 4))));
}

TEST_CASE("zero input gives the zero representer", "[convolution]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 0.5);
    const Signal u = Signal::discrete(0, {0.0, 0.0});
    const auto rep = representer_phi(k, u, 4.0);
    CHECK(rep.element.is_zero());
    CHECK(operator_norm(rep) == 0.0);
}

TEST_CASE("constant input representer matches brute-force sums", "[convolution]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 0.5);
    const Signal ones = Signal::discrete(-60, std::vector<double>(121, 1.0));
    const double tau = 7.0;
    const auto rep = representer_phi(k, ones, tau);
    for (std::int64_t t = 0; t <= 20; ++t) {
        long double brute = 0.0L;
        for (std::int64_t s = 0; s <= 67; ++s)
            brute += k.eval(static_cast<double>(t), static_cast<double>(s)) *
                     ones.value(tau - static_cast<double>(s));
        CHECK(rep.element.evaluate(static_cast<double>(t)) ==
              Approx(static_cast<double>(brute)).margin(1e-12));
    }
}

TEST_CASE("duality: the functional equals the inner product", "[convolution]") {
    const auto k = KernelDescriptor::dc(0.75, 0.5);
    Rng rng(21);
    const Signal u = make_input(InputKind::Prbs, {.start = -20, .length = 60}, 2);
    const double tau = 15.0;
    const double tail_tol = 1e-8;
    const auto rep = representer_phi(k, u, tau, tail_tol);
    for (int rep_i = 0; rep_i < 100; ++rep_i) {
        const auto g = random_element(k, rng, 10, 50.0);
        const double lhs = convolve(u, tau, g);
        const double rhs = inner(rep.element, g);
        CHECK(std::abs(lhs - rhs) <= tail_tol * norm(g) + 1e-10);
    }
}

TEST_CASE("sampled operator-norm bound holds", "[convolution]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 0.6);
    Rng rng(33);
    const Signal u = make_input(InputKind::UniformRandom, {.start = -30, .length = 70}, 4);
    const double tau = 11.0;
    const auto rep = representer_phi(k, u, tau);
    const double bound_scale = operator_norm(rep) + rep.tail_bound;
    for (int i = 0; i < 1000; ++i) {
        const auto g = random_element(k, rng, 8, 60.0);
        CHECK(std::abs(convolve(u, tau, g)) <= bound_scale * norm(g) * (1.0 + 1e-10));
    }
}

TEST_CASE("scaling the input scales the representer", "[convolution]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 0.5);
    std::vector<double> vals{0.3, -1.0, 0.7, 0.2};
    const Signal u = Signal::discrete(0, vals);
    for (double& v : vals) v *= -2.5;
    const Signal u_scaled = Signal::discrete(0, vals);
    const auto r1 = representer_phi(k, u, 3.0);
    const auto r2 = representer_phi(k, u_scaled, 3.0);
    REQUIRE(r1.element.atoms().size() == r2.element.atoms().size());
    for (std::size_t i = 0; i < r1.element.atoms().size(); ++i) {
        CHECK(r2.element.atoms()[i].center == r1.element.atoms()[i].center);
        CHECK(r2.element.atoms()[i].weight == Approx(-2.5 * r1.element.atoms()[i].weight));
    }
    for (std::int64_t t = 0; t <= 6; ++t)
        CHECK(r2.element.evaluate(static_cast<double>(t)) ==
              Approx(-2.5 * r1.element.evaluate(static_cast<double>(t))).margin(1e-15));
}

TEST_CASE("shifting the input shifts the representer time", "[convolution]") {
    const auto k = KernelDescriptor::dc(0.8, 0.1);
    const std::vector<double> vals{0.4, -0.9, 1.0, 0.3, -0.2};
    const Signal u = Signal::discrete(0, vals);
    const Signal u_shifted = Signal::discrete(-1, vals);  // u'(x) = u(x+1)
    const auto a = representer_phi(k, u, 8.0);
    const auto b = representer_phi(k, u_shifted, 7.0);
    REQUIRE(a.element.atoms().size() == b.element.atoms().size());
    for (std::size_t i = 0; i < a.element.atoms().size(); ++i) {
        CHECK(b.element.atoms()[i].center == a.element.atoms()[i].center);
        CHECK(b.element.atoms()[i].weight ==
              Approx(a.element.atoms()[i].weight).margin(1e-12));
    }
}

TEST_CASE("long supports truncate with an honest tail bound", "[convolution]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 0.5);
    const Signal ones = Signal::discrete(-3000, std::vector<double>(3101, 1.0));
    const double tail_tol = 1e-6;
    const auto rep = representer_phi(k, ones, 100.0, tail_tol);
    CHECK(rep.truncation_horizon < 3000.0);
    CHECK(rep.tail_bound > 0.0);
    CHECK(rep.tail_bound <= tail_tol);
    for (const auto& a : rep.element.atoms()) CHECK(a.center <= rep.truncation_horizon);

    // The truncated representer still satisfies duality within tail_tol.
    Rng rng(55);
    for (int i = 0; i < 50; ++i) {
        const auto g = random_element(k, rng, 6, 80.0);
        CHECK(std::abs(convolve(ones, 100.0, g) - inner(rep.element, g)) <=
              tail_tol * norm(g) + 1e-10);
    }
}

TEST_CASE("continuous convolution: step input against one section", "[convolution]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Continuous, 1.0);
    // u = 1 on [0, inf): reflected support is [0, tau].
    const Signal u = Signal::piecewise_constant({0.0}, {1.0});
    const double tau = 3.0;
    const double c = 1.5;
    // integral_0^tau exp(-max(s,c)) ds = c e^{-c} + e^{-c} - e^{-tau} for c <= tau.
    const double expect = c * std::exp(-c) + std::exp(-c) - std::exp(-tau);
    const auto got = convolve_detailed(u, tau, section(k, c));
    CHECK(got.value == Approx(expect).margin(1e-9));
    CHECK(std::abs(got.value - expect) <= got.error_bound + 1e-9);
}

TEST_CASE("continuous representer: duality within tail and quadrature error", "[convolution]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Continuous, 1.0);
    const Signal u = Signal::piecewise_constant({0.0, 1.0, 2.5, 4.0}, {1.0, -0.5, 0.75, 0.0});
    const double tau = 5.0;
    const auto rep = representer_phi(k, u, tau, 1e-8, 12);
    Rng rng(77);
    for (int i = 0; i < 30; ++i) {
        const auto g = random_element(k, rng, 5, 8.0);
        const auto conv = convolve_detailed(u, tau, g);
        // Dyadic discretization of the representer adds a first-order error
        // on top of the tail allowance.
        CHECK(std::abs(conv.value - inner(rep.element, g)) <=
              1e-3 * (1.0 + norm(g)) + conv.error_bound);
    }
    for (const auto& a : rep.element.atoms()) CHECK(a.center <= rep.truncation_horizon + 1e-12);
}

TEST_CASE("continuous long supports truncate with an honest tail bound", "[convolution]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Continuous, 1.0);
    const Signal step = Signal::piecewise_constant({0.0}, {1.0});  // 1 from t=0 onwards
    const double tail_tol = 1e-3;
    const auto rep = representer_phi(k, step, 50.0, tail_tol, 12);
    CHECK(rep.truncation_horizon < 50.0);
    CHECK(rep.tail_bound > 0.0);
    CHECK(rep.tail_bound <= tail_tol);
    // phi(0) is the integral of exp(-s) over the kept range, close to 1.
    CHECK(rep.element.evaluate(0.0) == Approx(1.0).margin(5e-3));
}

TEST_CASE("domain mismatches are rejected", "[convolution]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Continuous, 1.0);
    const Signal u = Signal::discrete(0, {1.0});
    Rng rng(1);
    CHECK_THROWS_AS(convolve(u, 1.0, section(k, 0.5)), std::invalid_argument);
    CHECK_THROWS_AS(representer_phi(k, u, 1.0), std::invalid_argument);
}
