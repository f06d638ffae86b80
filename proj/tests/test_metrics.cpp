#include <doctest.h>

#include "sinefm/metrics.hpp"

using namespace sinefm;

TEST_SUITE("metrics") {

TEST_CASE("perfect prediction scores 1 everywhere") {
    ConfusionMatrix cm(3);
    cm.add(0, 0);
    cm.add(1, 1);
    cm.add(1, 1);
    cm.add(2, 2);
    const Metrics m = compute_metrics(cm);
    CHECK(m.oa == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.miou == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.mean_f1 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hand-computed two-class confusion") {
    // [[3,1],[1,3]]: per-class IoU 3/5, OA 6/8, per-class F1 6/8.
    ConfusionMatrix cm(2);
    for (int i = 0; i < 3; ++i) cm.add(0, 0);
    cm.add(0, 1);
    cm.add(1, 0);
    for (int i = 0; i < 3; ++i) cm.add(1, 1);

    const Metrics m = compute_metrics(cm);
    CHECK(m.miou == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(m.oa == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(m.mean_f1 == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(cm.total() == 8);
}

TEST_CASE("all-one-class prediction on balanced truth") {
    ConfusionMatrix cm(2);
    for (int i = 0; i < 4; ++i) cm.add(0, 0);
    for (int i = 0; i < 4; ++i) cm.add(1, 0);
    const Metrics m = compute_metrics(cm);
    CHECK(m.oa == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(m.miou == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("classes absent from truth and prediction are excluded") {
    ConfusionMatrix cm(3);
    for (int i = 0; i < 3; ++i) cm.add(0, 0);
    cm.add(1, 0);
    // class 2 never appears on either axis
    const Metrics m = compute_metrics(cm);
    CHECK(m.excluded == std::vector<bool>{false, false, true});
    // means over classes 0 and 1 only: IoU = {3/4, 0} -> 0.375
    CHECK(m.miou == doctest::Approx(0.375).epsilon(1e-9));
    const std::string s = metrics_to_string(m);
    CHECK(s.find("excluded") != std::string::npos);
}

TEST_CASE("merge adds counts") {
    ConfusionMatrix a(2), b(2);
    a.add(0, 0);
    b.add(0, 0);
    b.add(1, 0);
    a.merge(b);
    CHECK(a.at(0, 0) == 2);
    CHECK(a.at(1, 0) == 1);
    CHECK(a.total() == 3);
}

} // TEST_SUITE
