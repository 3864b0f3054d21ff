#include <doctest.h>

#include "gonlab/biometrics.hpp"

using namespace gonlab;

namespace {

SegmentationMask rect_mask(int w, int h, int dx0, int dy0, int dx1, int dy1,
                           int cx0 = -1, int cy0 = -1, int cx1 = -1, int cy1 = -1) {
    SegmentationMask m(w, h);
    for (int y = dy0; y < dy1; ++y)
        for (int x = dx0; x < dx1; ++x) m.at(x, y) = 1;
    if (cx0 >= 0)
        for (int y = cy0; y < cy1; ++y)
            for (int x = cx0; x < cx1; ++x) m.at(x, y) = 2;
    return m;
}

}  // namespace

TEST_CASE("vertical_cdr of a nested rectangle pair") {
    // disc rows 100..299 (extent 200), cup rows 140..269 (extent 130)
    const auto m = rect_mask(400, 400, 80, 100, 320, 300, 120, 140, 280, 270);
    CHECK(vertical_cdr(m) == doctest::Approx(0.65).epsilon(1e-12));
}

TEST_CASE("vertical_cdr counts cup pixels as part of the disc extent") {
    // cup sticks out below the labeled-1 region: disc extent must cover it
    SegmentationMask m(100, 100);
    for (int y = 20; y < 50; ++y) m.at(50, y) = 1;
    for (int y = 50; y < 80; ++y) m.at(50, y) = 2;
    CHECK(vertical_cdr(m) == doctest::Approx(30.0 / 60.0));
}

TEST_CASE("vertical_cdr with no cup is zero") {
    const auto m = rect_mask(100, 100, 10, 10, 90, 90);
    CHECK(vertical_cdr(m) == 0.0);
}

TEST_CASE("vertical_cdr with no disc throws EmptyDisc") {
    CHECK_THROWS_AS(vertical_cdr(SegmentationMask(50, 50)), EmptyDisc);
}

TEST_CASE("rdr is the rim share of the disc area") {
    // disc 240x200 = 48000 px, cup 160x130 = 20800 px -> rim 27200
    const auto m = rect_mask(400, 400, 80, 100, 320, 300, 120, 140, 280, 270);
    CHECK(rdr(m) == doctest::Approx(27200.0 / 48000.0).epsilon(1e-12));
}

TEST_CASE("rdr is 1 without a cup and 0 when the cup fills the disc") {
    CHECK(rdr(rect_mask(50, 50, 10, 10, 40, 40)) == 1.0);
    SegmentationMask all_cup(50, 50);
    for (int y = 10; y < 40; ++y)
        for (int x = 10; x < 40; ++x) all_cup.at(x, y) = 2;
    CHECK(rdr(all_cup) == 0.0);
}

TEST_CASE("ratios are scale invariant") {
    const auto small = rect_mask(100, 100, 20, 25, 80, 75, 30, 35, 70, 65);
    const auto big = rect_mask(200, 200, 40, 50, 160, 150, 60, 70, 140, 130);
    CHECK(vertical_cdr(small) == doctest::Approx(vertical_cdr(big)).epsilon(1e-12));
    CHECK(rdr(small) == doctest::Approx(rdr(big)).epsilon(1e-12));
}

TEST_CASE("cdr_mae matches a hand-computed mean") {
    const std::vector<double> pred{0.5, 0.7, 0.3};
    const std::vector<double> truth{0.55, 0.6, 0.35};
    CHECK(cdr_mae(pred, truth) == doctest::Approx((0.05 + 0.10 + 0.05) / 3.0).epsilon(1e-12));
}

TEST_CASE("cdr_mae rejects mismatched or empty inputs") {
    CHECK_THROWS_AS(cdr_mae({0.1}, {0.1, 0.2}), ValidationError);
    CHECK_THROWS_AS(cdr_mae({}, {}), ValidationError);
}

TEST_CASE("baseline scorers orient toward disease") {
    Biometrics low{0.3, 0.8};   // healthy-looking: small cup, thick rim
    Biometrics high{0.8, 0.2};  // glaucomatous: large cup, thin rim
    CHECK(baseline_score(low, BaselineKind::Cdr) < baseline_score(high, BaselineKind::Cdr));
    CHECK(baseline_score(low, BaselineKind::Rdr) < baseline_score(high, BaselineKind::Rdr));
    CHECK(baseline_score(high, BaselineKind::Rdr) == doctest::Approx(0.8));
}

TEST_CASE("compute_biometrics bundles both ratios") {
    const auto m = rect_mask(400, 400, 80, 100, 320, 300, 120, 140, 280, 270);
    const auto b = compute_biometrics(m);
    CHECK(b.vcdr == doctest::Approx(0.65));
    CHECK(b.rdr == doctest::Approx(27200.0 / 48000.0));
}
