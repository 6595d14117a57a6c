#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

#include "topofeat/errors.hpp"
#include "topofeat/eval.hpp"
#include "topofeat/rng.hpp"

using namespace topofeat;

namespace {

struct Dataset {
    std::vector<std::vector<double>> rows;
    std::vector<Label> labels;
};

// Two well-separated 3-d clusters with +-1 noise.
Dataset separable(std::size_t per_class, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    for (int cls = 0; cls < 2; ++cls) {
        const double center = cls == 0 ? -10.0 : 10.0;
        for (std::size_t i = 0; i < per_class; ++i) {
            d.rows.push_back({center + rng.uniform(-1.0, 1.0), center + rng.uniform(-1.0, 1.0),
                              center + rng.uniform(-1.0, 1.0)});
            d.labels.push_back(cls == 0 ? Label::Normal : Label::Abnormal);
        }
    }
    return d;
}

} // namespace

TEST_CASE("label names round trip") {
    CHECK(to_string(Label::Normal) == "normal");
    CHECK(to_string(Label::Abnormal) == "abnormal");
    CHECK(label_from_string("normal") == Label::Normal);
    CHECK(label_from_string("abnormal") == Label::Abnormal);
    CHECK_THROWS_AS(label_from_string("benign"), std::invalid_argument);
}

TEST_CASE("sensitivity and specificity") {
    CHECK(sensitivity({4, 0, 0, 0}) == 1.0);
    CHECK(sensitivity({0, 2, 0, 0}) == 0.0);
    CHECK(sensitivity({3, 1, 0, 0}) == 0.75);
    CHECK(specificity({0, 0, 4, 1}) == 0.8);
    CHECK(specificity({0, 0, 0, 3}) == 0.0);
    CHECK_THROWS_AS(sensitivity({0, 0, 5, 5}), UndefinedMetric);
    CHECK_THROWS_AS(specificity({5, 5, 0, 0}), UndefinedMetric);
}

TEST_CASE("the two metrics are mirror images") {
    for (std::size_t a = 0; a <= 6; ++a) {
        for (std::size_t b = 0; b <= 6; ++b) {
            if (a + b == 0) continue;
            ConfusionCounts as_positive{a, b, 0, 0};
            ConfusionCounts as_negative{0, 0, a, b};
            CHECK(sensitivity(as_positive) == specificity(as_negative));
        }
    }
}

TEST_CASE("stratified folds balance both classes") {
    std::vector<Label> labels(20, Label::Normal);
    std::fill(labels.begin() + 10, labels.end(), Label::Abnormal);
    const std::vector<int> fold = stratified_kfold(labels, 5, 42);
    REQUIRE(fold.size() == labels.size());
    std::map<int, int> normal_count, abnormal_count;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        REQUIRE(fold[i] >= 0);
        REQUIRE(fold[i] < 5);
        (labels[i] == Label::Normal ? normal_count : abnormal_count)[fold[i]]++;
    }
    for (int f = 0; f < 5; ++f) {
        CHECK(normal_count[f] == 2);
        CHECK(abnormal_count[f] == 2);
    }
}

TEST_CASE("uneven classes differ by at most one per fold") {
    std::vector<Label> labels(209, Label::Normal);
    labels.insert(labels.end(), 113, Label::Abnormal);
    const std::vector<int> fold = stratified_kfold(labels, 5, 7);
    std::map<int, int> normal_count, abnormal_count;
    for (std::size_t i = 0; i < labels.size(); ++i)
        (labels[i] == Label::Normal ? normal_count : abnormal_count)[fold[i]]++;
    int normals = 0, abnormals = 0;
    for (int f = 0; f < 5; ++f) {
        CHECK(normal_count[f] >= 41);
        CHECK(normal_count[f] <= 42);
        CHECK(abnormal_count[f] >= 22);
        CHECK(abnormal_count[f] <= 23);
        normals += normal_count[f];
        abnormals += abnormal_count[f];
    }
    CHECK(normals == 209);
    CHECK(abnormals == 113);
}

TEST_CASE("fold assignment is a pure function of labels, k and seed") {
    std::vector<Label> labels(30, Label::Normal);
    std::fill(labels.begin() + 13, labels.end(), Label::Abnormal);
    CHECK(stratified_kfold(labels, 4, 99) == stratified_kfold(labels, 4, 99));
    CHECK(stratified_kfold(labels, 4, 99) != stratified_kfold(labels, 4, 100));
}

TEST_CASE("folds require enough of each class") {
    std::vector<Label> labels(10, Label::Normal);
    labels.insert(labels.end(), 3, Label::Abnormal);
    CHECK_THROWS_AS(stratified_kfold(labels, 5, 1), InsufficientClass);
    CHECK_THROWS_AS(stratified_kfold(labels, 1, 1), std::invalid_argument);
}

TEST_CASE("the baseline separates well-separated clusters") {
    const Dataset d = separable(12, 3);
    const LinearClassifier clf = train_baseline(d.rows, d.labels);
    for (std::size_t i = 0; i < d.rows.size(); ++i)
        CHECK(predict(clf, d.rows[i]) == d.labels[i]);
}

TEST_CASE("constant columns are harmless") {
    Dataset d = separable(12, 4);
    for (auto& r : d.rows) r.push_back(7.0);
    const LinearClassifier clf = train_baseline(d.rows, d.labels);
    CHECK(clf.inv_std.back() == 0.0);
    for (std::size_t i = 0; i < d.rows.size(); ++i)
        CHECK(predict(clf, d.rows[i]) == d.labels[i]);
}

TEST_CASE("duplicating a column leaves predictions unchanged") {
    const Dataset d = separable(12, 5);
    Dataset dup = d;
    for (auto& r : dup.rows) r.push_back(r[0]);
    const LinearClassifier a = train_baseline(d.rows, d.labels);
    const LinearClassifier b = train_baseline(dup.rows, dup.labels);
    for (std::size_t i = 0; i < d.rows.size(); ++i)
        CHECK(predict(a, d.rows[i]) == predict(b, dup.rows[i]));
}

TEST_CASE("feature width mismatches are rejected") {
    const Dataset d = separable(8, 6);
    const LinearClassifier clf = train_baseline(d.rows, d.labels);
    CHECK_THROWS_AS(decision_value(clf, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(train_baseline({{1.0}, {1.0, 2.0}}, {Label::Normal, Label::Abnormal}),
                    std::invalid_argument);
    CHECK_THROWS_AS(train_baseline({}, {}), std::invalid_argument);
}

TEST_CASE("cross-validation is perfect on separable data") {
    const Dataset d = separable(15, 8);
    const EvalReport r = cross_validate(d.rows, d.labels, 5, 11);
    CHECK(r.mean_sensitivity == 1.0);
    CHECK(r.mean_specificity == 1.0);
    CHECK(r.std_sensitivity == 0.0);
    CHECK(r.std_specificity == 0.0);
    REQUIRE(r.folds.size() == 5);
    for (const auto& f : r.folds) {
        CHECK(f.counts.tp == 3);
        CHECK(f.counts.tn == 3);
        CHECK(f.counts.fn == 0);
        CHECK(f.counts.fp == 0);
    }
}

TEST_CASE("shuffled labels score near chance") {
    Dataset d = separable(30, 9);
    Rng rng(10);
    rng.shuffle(d.labels); // features now carry no label information
    const EvalReport r = cross_validate(d.rows, d.labels, 5, 12);
    CHECK(r.mean_sensitivity > 0.2);
    CHECK(r.mean_sensitivity < 0.8);
    CHECK(r.mean_specificity > 0.2);
    CHECK(r.mean_specificity < 0.8);
}

TEST_CASE("identical inputs give identical reports") {
    const Dataset d = separable(10, 13);
    const EvalReport a = cross_validate(d.rows, d.labels, 4, 21);
    const EvalReport b = cross_validate(d.rows, d.labels, 4, 21);
    CHECK(report_to_json(a) == report_to_json(b));
    CHECK(a.fold_assignment == b.fold_assignment);
}

TEST_CASE("training never sees the evaluation fold") {
    const Dataset d = separable(10, 14);
    const int k = 4;
    const std::uint64_t seed = 17;
    const std::vector<int> fold = stratified_kfold(d.labels, k, seed);

    // Corrupt every fold-0 row beyond recognition; training data for fold 0
    // is untouched, so its classifier must match one trained externally on
    // the clean remainder.
    Dataset poisoned = d;
    for (std::size_t i = 0; i < poisoned.rows.size(); ++i)
        if (fold[i] == 0)
            for (double& x : poisoned.rows[i]) x = x * -40.0 + 1000.0;

    std::vector<std::vector<double>> train_rows;
    std::vector<Label> train_labels;
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        if (fold[i] != 0) {
            train_rows.push_back(d.rows[i]);
            train_labels.push_back(d.labels[i]);
        }
    }
    const LinearClassifier external = train_baseline(train_rows, train_labels);

    ConfusionCounts expected;
    for (std::size_t i = 0; i < poisoned.rows.size(); ++i) {
        if (fold[i] != 0) continue;
        const Label got = predict(external, poisoned.rows[i]);
        if (poisoned.labels[i] == Label::Abnormal)
            (got == Label::Abnormal ? expected.tp : expected.fn)++;
        else
            (got == Label::Normal ? expected.tn : expected.fp)++;
    }

    const EvalReport r = cross_validate(poisoned.rows, poisoned.labels, k, seed);
    CHECK(r.folds[0].counts.tp == expected.tp);
    CHECK(r.folds[0].counts.fn == expected.fn);
    CHECK(r.folds[0].counts.tn == expected.tn);
    CHECK(r.folds[0].counts.fp == expected.fp);
}

TEST_CASE("class shortage propagates through cross-validation") {
    Dataset d = separable(10, 15);
    std::fill(d.labels.begin(), d.labels.begin() + 18, Label::Normal); // 2 abnormal left
    CHECK_THROWS_AS(cross_validate(d.rows, d.labels, 5, 1), InsufficientClass);
}

TEST_CASE("report serializations carry the full summary") {
    const Dataset d = separable(10, 16);
    const EvalReport r = cross_validate(d.rows, d.labels, 5, 2);

    const std::string text = report_to_text(r);
    CHECK(text.find("mean sensitivity") != std::string::npos);
    CHECK(text.find("mean specificity") != std::string::npos);
    CHECK(text.find("fold") != std::string::npos);

    const nlohmann::json j = nlohmann::json::parse(report_to_json(r));
    CHECK(j.at("k") == 5);
    CHECK(j.at("seed") == 2);
    CHECK(j.at("folds").size() == 5);
    CHECK(j.at("fold_assignment").size() == d.rows.size());
    CHECK(j.at("classifier").get<std::string>().find("l2-squared-hinge-gd") == 0);
    CHECK(j.contains("mean_sensitivity"));
    CHECK(j.contains("std_specificity"));
    for (const auto& f : j.at("folds")) {
        CHECK(f.contains("tp"));
        CHECK(f.contains("sensitivity"));
    }
}
