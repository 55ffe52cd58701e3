#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "wpt/fbl.hpp"

using namespace wpt;

TEST_CASE("q_function reference values") {
    CHECK(fbl::q_function(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fbl::q_function(40.0) <= 1e-300);
    // root of Q(x) = 0.1
    CHECK(fbl::q_function(1.2815515655) == doctest::Approx(0.1).epsilon(1e-9));
    // symmetry Q(-x) = 1 - Q(x)
    for (double x : {0.3, 1.0, 2.5}) {
        CHECK(fbl::q_function(-x) ==
              doctest::Approx(1.0 - fbl::q_function(x)).epsilon(1e-12));
    }
}

TEST_CASE("q_inverse round trip and reference values") {
    CHECK(fbl::q_inverse(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fbl::q_inverse(0.1) == doctest::Approx(1.2815515655).epsilon(1e-9));
    CHECK(fbl::q_inverse(1e-9) == doctest::Approx(5.9978).epsilon(1e-4));
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(1e-12, 1.0 - 1e-12);
    for (int t = 0; t < 500; ++t) {
        double p = u(rng);
        CHECK(std::abs(fbl::q_function(fbl::q_inverse(p)) - p) <=
              1e-10 * std::max(1.0, p));
    }
    CHECK_THROWS_AS(fbl::q_inverse(0.0), std::domain_error);
    CHECK_THROWS_AS(fbl::q_inverse(1.0), std::domain_error);
    CHECK_THROWS_AS(fbl::q_inverse(-0.5), std::domain_error);
}

TEST_CASE("capacity and dispersion") {
    CHECK(fbl::capacity(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(fbl::capacity(0.0) == 0.0);
    CHECK(fbl::capacity(3.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(fbl::dispersion(0.0) == 0.0);
    CHECK(fbl::dispersion(1e12) ==
          doctest::Approx(fbl::kLog2E * fbl::kLog2E).epsilon(1e-10));
    CHECK(fbl::dispersion(1.0) ==
          doctest::Approx(0.75 * fbl::kLog2E * fbl::kLog2E).epsilon(1e-12));
}

TEST_CASE("error_prob reference point and conventions") {
    // rate exactly at capacity -> Q(0) = 0.5
    CHECK(fbl::error_prob(1.0, 1.0, 37.0) == doctest::Approx(0.5).epsilon(1e-12));
    // gamma=1, m=100, r=0.5: argument 0.5*sqrt(100/dispersion(1))
    double expect = fbl::q_function(0.5 * std::sqrt(100.0 / fbl::dispersion(1.0)));
    CHECK(expect == doctest::Approx(3.136e-5).epsilon(1e-3));
    CHECK(fbl::error_prob(1.0, 0.5, 100.0) == doctest::Approx(expect).epsilon(1e-12));
    // zero SNR with positive rate -> 1 by convention
    CHECK(fbl::error_prob(0.0, 0.3, 50.0) == 1.0);
    // rate above capacity -> above 0.5 and approaching 1 with m
    double prev = 0.5;
    for (double m : {10.0, 100.0, 1000.0}) {
        double e = fbl::error_prob(1.0, 1.5, m);
        CHECK(e > prev);
        prev = e;
    }
    CHECK(prev > 0.99);
}

TEST_CASE("error_prob monotone in snr and blocklength") {
    for (double r : {0.3, 0.8}) {
        double prev = 2.0;
        for (double snr : {1.0, 2.0, 4.0, 8.0}) {
            double e = fbl::error_prob(snr, r, 80.0);
            CHECK(e < prev);
            prev = e;
        }
        prev = 2.0;
        for (double m : {20.0, 40.0, 80.0, 160.0}) {
            double e = fbl::error_prob(2.0, r, m);  // capacity(2) > 0.8
            CHECK(e < prev);
            prev = e;
        }
    }
}

TEST_CASE("error_prob convex in snr for snr >= 1") {
    for (double r : {0.5, 1.0}) {
        for (double m : {50.0, 200.0}) {
            for (double g = 1.0; g < 20.0; g += 0.25) {
                double h = 1e-3 * g;
                double second = fbl::error_prob(g + h, r, m) -
                                2.0 * fbl::error_prob(g, r, m) +
                                fbl::error_prob(g - h, r, m);
                CHECK(second >= -1e-9);
            }
        }
    }
}

TEST_CASE("error_prob_dsnr matches finite differences") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ug(1.2, 30.0), um(20.0, 400.0);
    for (int t = 0; t < 200; ++t) {
        double g = ug(rng), m = um(rng);
        double r = 0.7 * fbl::capacity(g);
        double h = 1e-6 * g;
        double fd = (fbl::error_prob(g + h, r, m) - fbl::error_prob(g - h, r, m)) /
                    (2.0 * h);
        double an = fbl::error_prob_dsnr(g, r, m);
        if (std::abs(fd) > 1e-280) {
            CHECK(an == doctest::Approx(fd).epsilon(1e-5));
        }
        CHECK(an <= 0.0);
    }
}

TEST_CASE("error_prob_tilde consistency with error_prob") {
    double z2 = 2e-7, noise = 1e-10, k = 90.0;
    double sp = std::sqrt(3.0 * noise / z2);  // gamma = 3
    double e1 = fbl::error_prob_tilde(sp, 1.0 / 70.0, z2, noise, k);
    double e2 = fbl::error_prob(3.0, k / 70.0, 70.0);
    CHECK(e1 == doctest::Approx(e2).epsilon(1e-12));
}

TEST_CASE("error_prob_partials match finite differences") {
    double z2 = 5e-7, noise = 1e-10, k = 90.0;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ug(1.3, 40.0), um(60.0, 350.0);
    int checked = 0;
    for (int t = 0; t < 200; ++t) {
        double gamma = ug(rng), m = um(rng);
        if (k / m >= fbl::capacity(gamma)) continue;
        double sp = std::sqrt(gamma * noise / z2);
        double mt = 1.0 / m;
        auto part = fbl::error_prob_partials(sp, mt, z2, noise, k);
        double hp = 1e-6 * sp;
        double fd_p = (fbl::error_prob_tilde(sp + hp, mt, z2, noise, k) -
                       fbl::error_prob_tilde(sp - hp, mt, z2, noise, k)) /
                      (2.0 * hp);
        double hm = 1e-6 * mt;
        double fd_m = (fbl::error_prob_tilde(sp, mt + hm, z2, noise, k) -
                       fbl::error_prob_tilde(sp, mt - hm, z2, noise, k)) /
                      (2.0 * hm);
        if (std::abs(fd_p) > 1e-280 && std::abs(fd_m) > 1e-280) {
            CHECK(part.d_sqrt_power == doctest::Approx(fd_p).epsilon(1e-5));
            CHECK(part.d_inv_blocklength == doctest::Approx(fd_m).epsilon(1e-5));
            ++checked;
        }
        CHECK(part.d_sqrt_power <= 0.0);
        CHECK(part.d_inv_blocklength >= 0.0);
    }
    CHECK(checked > 50);
}

TEST_CASE("error_prob_tilde jointly convex away from the low-snr edge") {
    // supporting-hyperplane test: for a convex function the tangent plane
    // at any point underestimates the function everywhere in the region.
    // Joint convexity in (sqrt power, 1/blocklength) degrades slightly for
    // snr below ~3, so the sampled region starts there.
    double z2 = 5e-7, noise = 1e-10, k = 90.0;
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> ug(3.0, 25.0), um(70.0, 300.0);
    int tested = 0;
    auto draw = [&](double& sp, double& mt) {
        while (true) {
            double gamma = ug(rng), m = um(rng);
            if (k / m >= fbl::capacity(gamma)) continue;
            sp = std::sqrt(gamma * noise / z2);
            mt = 1.0 / m;
            return;
        }
    };
    for (int t = 0; t < 1000; ++t) {
        double sp_x, mt_x, sp_y, mt_y;
        draw(sp_x, mt_x);
        draw(sp_y, mt_y);
        double fx = fbl::error_prob_tilde(sp_x, mt_x, z2, noise, k);
        double fy = fbl::error_prob_tilde(sp_y, mt_y, z2, noise, k);
        auto g = fbl::error_prob_partials(sp_x, mt_x, z2, noise, k);
        double t1 = g.d_sqrt_power * (sp_y - sp_x);
        double t2 = g.d_inv_blocklength * (mt_y - mt_x);
        double plane = fx + t1 + t2;
        // the plane sum can cancel catastrophically, so the tolerance must
        // scale with the individual terms, not the result
        double tol = 1e-7 * (std::abs(fx) + std::abs(t1) + std::abs(t2) + 1e-300);
        CHECK(fy >= plane - tol);
        ++tested;
    }
    CHECK(tested == 1000);
}

TEST_CASE("overall error aggregation") {
    std::vector<double> eps{0.01, 0.01};
    CHECK(fbl::overall_error_exact(eps) == doctest::Approx(0.0199).epsilon(1e-12));
    CHECK(fbl::overall_error_approx(eps) == doctest::Approx(0.02).epsilon(1e-12));
    std::vector<double> zero{0.0, 0.0, 0.0};
    CHECK(fbl::overall_error_exact(zero) == 0.0);
    CHECK(fbl::overall_error_approx(zero) == 0.0);
    std::vector<double> absorb{0.3, 1.0, 0.2};
    CHECK(fbl::overall_error_exact(absorb) == 1.0);
    // exact <= approx with bounded gap
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 0.3);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> e{u(rng), u(rng), u(rng)};
        double ex = fbl::overall_error_exact(e);
        double ap = fbl::overall_error_approx(e);
        CHECK(ex <= ap + 1e-15);
        double pair_sum = e[0] * e[1] + e[0] * e[2] + e[1] * e[2];
        CHECK(ap - ex <= pair_sum + 1e-12);
    }
}
