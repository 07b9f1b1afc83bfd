#include <catch2/catch.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "rkhsid/checks.hpp"
#include "rkhsid/simulate.hpp"
#include "support/oracles.hpp"

using namespace rkhsid;

TEST_CASE("integrability check: geometric kernel passes", "[checks]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 0.5);
    const auto report = check_integrability(k, 1e-10, 65536);
    CHECK(report.pass);
    REQUIRE(!report.observations.empty());
    CHECK(report.observations[0].first == "measure");
    CHECK(report.observations[0].second == Approx(6.0).margin(1e-8));
}

TEST_CASE("integrability check: finite identity-like table passes", "[checks]") {
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(5, 5);
    const auto k = KernelDescriptor::tabulated(TimeDomain::Discrete,
                                               {0.0, 1.0, 2.0, 3.0, 4.0}, eye);
    const auto report = check_integrability(k, 1e-10, 1024);
    CHECK(report.pass);
    CHECK(report.observations[0].second == Approx(5.0));
}

TEST_CASE("integrability check: near-flat kernel fails with a verdict", "[checks]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 1.0 - 1e-9);
    const auto report = check_integrability(k, 1e-6, 2048);
    CHECK_FALSE(report.pass);
    CHECK(report.worst_margin < 0.0);
    CHECK(report.note.find("divergence") != std::string::npos);
}

TEST_CASE("stability probe: constant, zero, and extremizer inputs", "[checks]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 0.5);
    std::vector<Signal> probes;
    probes.push_back(Signal::discrete(0, std::vector<double>(64, 1.0)));
    probes.push_back(Signal::discrete(0, std::vector<double>(8, 0.0)));
    // Sign extremizer: column sums of a positive kernel are positive.
    probes.push_back(Signal::discrete(0, std::vector<double>(64, 1.0)));
    const auto report = check_stability_probe(k, probes, 8192, 1e-9);
    CHECK(report.pass);
    CHECK(report.note.find("evidence") != std::string::npos);
    // Zero probe converges to zero.
    bool found_zero = false;
    for (const auto& [name, value] : report.observations)
        if (name == "probe1_value") {
            CHECK(value == 0.0);
            found_zero = true;
        }
    CHECK(found_zero);
    // Every probe value is dominated by ||u||_inf times the kernel mass.
    for (const auto& [name, value] : report.observations)
        if (name.find("_value") != std::string::npos) CHECK(value <= 6.0 + 1e-9);
}

TEST_CASE("nested dyadic sums match the literal construction", "[checks]") {
    for (const auto& k : {KernelDescriptor::tc(TimeDomain::Continuous, 1.0),
                          KernelDescriptor::ss(0.7)}) {
        const double lo = 0.25, hi = 1.75;
        const int finest = 5;
        const auto m = rkhsid::detail::nested_grid_pair_sums(k, lo, hi, finest);
        for (int a = 0; a <= finest; ++a) {
            for (int b = 0; b <= a; ++b) {
                const auto fa = section_integral(k, lo, hi, a);
                const auto fb = section_integral(k, lo, hi, b);
                const double da = (hi - lo) / static_cast<double>(1 << a);
                const double db = (hi - lo) / static_cast<double>(1 << b);
                const double fast = da * db * m[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
                const double literal = inner(fa, fb);
                CHECK(fast == Approx(literal).epsilon(1e-12).margin(1e-14));
            }
        }
    }
}

TEST_CASE("dyadic refinement check passes on the exponential kernel", "[checks]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Continuous, 1.0);
    const auto report = check_dyadic_cauchy(k, 0.0, 1.0, 10, 1e-3);
    CHECK(report.pass);
    // Gap sequence decays and the norm identity holds at the finest level.
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& [name, value] : report.observations) {
        if (name.rfind("refinement_gap_n", 0) == 0) {
            CHECK(value <= prev * 1.0000001);
            prev = value;
        }
    }
}

TEST_CASE("dyadic refinement check: constant kernel stays at the noise floor", "[checks]") {
    Eigen::MatrixXd vals = Eigen::MatrixXd::Constant(2, 2, 0.8);
    const auto k = KernelDescriptor::tabulated(TimeDomain::Continuous, {0.0, 1.0}, vals);
    // Every Riemann sum of a constant is exact; the refinement gaps are pure
    // cancellation roundoff, orders of magnitude under the check tolerance.
    const auto report = check_dyadic_cauchy(k, 0.0, 1.0, 6, 1e-7);
    CHECK(report.pass);
    for (const auto& [name, value] : report.observations) {
        if (name.rfind("refinement_gap_n", 0) == 0) CHECK(value <= 1e-7);
        if (name == "norm_sq_at_n_max") CHECK(value == Approx(0.8).margin(1e-12));
    }
}

TEST_CASE("dyadic refinement check rejects bad arguments", "[checks]") {
    const auto kd = KernelDescriptor::tc(TimeDomain::Discrete, 0.5);
    const auto kc = KernelDescriptor::tc(TimeDomain::Continuous, 1.0);
    CHECK_THROWS_AS(check_dyadic_cauchy(kd, 0.0, 1.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(check_dyadic_cauchy(kc, 1.0, 1.0, 4), std::invalid_argument);
}

TEST_CASE("partial-sum gaps sit under the tail bound", "[checks]") {
    Rng rng(71);
    for (const auto& k : {KernelDescriptor::tc(TimeDomain::Discrete, 0.5),
                          KernelDescriptor::dc(0.75, -0.6)}) {
        const double tau = 6.0;
        InputParams p;
        p.start = -64;
        p.length = 140;
        const Signal u = make_input(InputKind::Prbs, p, rng.integer(0, 1 << 20));
        const auto report = check_partial_sum_cauchy(k, u, tau, 64);
        CHECK(report.pass);
        CHECK(report.rows.size() == 4);  // m in {4, 8, 16, 32}
    }
}

TEST_CASE("partial-sum gaps: zero input and equal indices", "[checks]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 0.5);
    const Signal zero = Signal::discrete(0, std::vector<double>(40, 0.0));
    const auto report = check_partial_sum_cauchy(k, zero, 5.0, 64);
    CHECK(report.pass);
    for (const auto& row : report.rows) CHECK(row.observed == 0.0);

    // m = n means an empty band, gap exactly zero.
    const Signal u = make_input(InputKind::Prbs, {.start = -40, .length = 80}, 9);
    KahanSum gap2;
    auto v = [&](std::int64_t s) { return u.value(5.0 - static_cast<double>(s)); };
    for (std::int64_t s = 9; s <= 8; ++s)
        for (std::int64_t t = 9; t <= 8; ++t)
            gap2.add(k.eval(static_cast<double>(s), static_cast<double>(t)) * v(s) * v(t));
    CHECK(gap2.value() == 0.0);
}

TEST_CASE("continuity certificate: impulse attains the bound", "[checks]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 0.5);
    const Signal impulse = Signal::discrete(0, {1.0});
    const auto report = check_continuity_certificate(k, impulse, 6.0, 500, 11);
    CHECK(report.pass);
    // Equality case: g = the section at tau saturates Cauchy-Schwarz.
    const auto rep = representer_phi(k, impulse, 6.0);
    const auto g = section(k, 6.0);
    CHECK(std::abs(convolve(impulse, 6.0, g)) ==
          Approx(operator_norm(rep) * norm(g)).epsilon(1e-12));
}

TEST_CASE("continuity certificate: zero input", "[checks]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 0.5);
    const Signal zero = Signal::discrete(0, {0.0});
    const auto report = check_continuity_certificate(k, zero, 3.0, 200, 5);
    CHECK(report.pass);
    for (const auto& row : report.rows) CHECK(row.observed <= 1e-10);
}

TEST_CASE("continuity certificate: random bounded inputs pass", "[checks]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 0.5);
    const Signal u = make_input(InputKind::UniformRandom, {.start = -25, .length = 60}, 17);
    const auto report = check_continuity_certificate(k, u, 10.0, 1000, 3);
    CHECK(report.pass);
}

TEST_CASE("fubini check: identical and disjoint boxes", "[checks]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Continuous, 1.0);
    const auto same = check_fubini(k, {0.0, 1.0}, {0.0, 1.0}, 12);
    CHECK(same.pass);
    // box1 == box2 reduces to the norm identity for the section integral.
    for (const auto& [name, value] : same.observations)
        if (name == "inner_product")
            CHECK(value == Approx(2.0 - 4.0 / std::exp(1.0)).margin(1e-3));

    const auto disjoint = check_fubini(k, {0.0, 1.0}, {2.0, 3.0}, 10);
    CHECK(disjoint.pass);
    for (const auto& [name, value] : disjoint.observations)
        if (name == "iterated_integral_ts")
            CHECK(value == Approx(oracles::quad_2d_kernel(k, 2.0, 3.0, 0.0, 1.0)).margin(1e-8));
}

TEST_CASE("report csv has one row per check with stable hashes", "[checks]") {
    const auto k = KernelDescriptor::tc(TimeDomain::Discrete, 0.5);
    std::vector<CheckReport> reports;
    reports.push_back(check_integrability(k, 1e-10, 65536));
    reports.push_back(check_partial_sum_cauchy(
        k, make_input(InputKind::Prbs, {.start = -64, .length = 140}, 5), 6.0, 64));
    const auto path = std::filesystem::temp_directory_path() / "rkhsid_checks.csv";
    write_check_reports_csv(path.string(), reports);

    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "check,parameter_hash,verdict,worst_margin");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    std::filesystem::remove(path);

    CHECK(parameter_hash(reports[0].parameters) == parameter_hash(reports[0].parameters));
    CHECK(parameter_hash(reports[0].parameters) != parameter_hash(reports[1].parameters));
}
