#include "topofeat/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "topofeat/errors.hpp"
#include "topofeat/rng.hpp"

namespace topofeat {

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double pop_std_of(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

void check_matrix(const std::vector<std::vector<double>>& rows, const std::vector<Label>& labels) {
    if (rows.empty()) throw std::invalid_argument("empty feature matrix");
    if (rows.size() != labels.size()) throw std::invalid_argument("row/label count mismatch");
    for (const auto& r : rows)
        if (r.size() != rows.front().size()) throw std::invalid_argument("ragged feature matrix");
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

} // namespace

std::string to_string(Label l) { return l == Label::Abnormal ? "abnormal" : "normal"; }

Label label_from_string(const std::string& s) {
    if (s == "normal") return Label::Normal;
    if (s == "abnormal") return Label::Abnormal;
    throw std::invalid_argument("unknown label '" + s + "' (expected 'normal' or 'abnormal')");
}

double sensitivity(const ConfusionCounts& c) {
    const std::size_t denom = c.tp + c.fn;
    if (denom == 0) throw UndefinedMetric("sensitivity undefined: no abnormal examples evaluated");
    return static_cast<double>(c.tp) / static_cast<double>(denom);
}

double specificity(const ConfusionCounts& c) {
    const std::size_t denom = c.tn + c.fp;
    if (denom == 0) throw UndefinedMetric("specificity undefined: no normal examples evaluated");
    return static_cast<double>(c.tn) / static_cast<double>(denom);
}

std::vector<int> stratified_kfold(const std::vector<Label>& labels, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("need k >= 2 folds");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[labels[i] == Label::Abnormal ? 1 : 0].push_back(i);
    for (int c = 0; c < 2; ++c)
        if (by_class[c].size() < static_cast<std::size_t>(k))
            throw InsufficientClass("class '" + to_string(c == 1 ? Label::Abnormal : Label::Normal) +
                                    "' has " + std::to_string(by_class[c].size()) +
                                    " examples, fewer than " + std::to_string(k) + " folds");

    Rng rng(seed);
    std::vector<int> fold(labels.size(), 0);
    for (int c = 0; c < 2; ++c) {
        rng.shuffle(by_class[c]);
        for (std::size_t t = 0; t < by_class[c].size(); ++t)
            fold[by_class[c][t]] = static_cast<int>(t % static_cast<std::size_t>(k));
    }
    return fold;
}

LinearClassifier train_baseline(const std::vector<std::vector<double>>& rows,
                                const std::vector<Label>& labels, const TrainOptions& opts) {
    check_matrix(rows, labels);
    if (opts.iterations < 1 || !(opts.lambda >= 0.0))
        throw std::invalid_argument("bad training options");
    const std::size_t n = rows.size();
    const std::size_t d = rows.front().size();

    LinearClassifier clf;
    clf.mean.assign(d, 0.0);
    clf.inv_std.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double m = 0.0;
        for (const auto& r : rows) m += r[j];
        m /= static_cast<double>(n);
        double var = 0.0;
        for (const auto& r : rows) var += (r[j] - m) * (r[j] - m);
        var /= static_cast<double>(n);
        clf.mean[j] = m;
        clf.inv_std[j] = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
    }

    // Standardized copy; constant columns become identically zero.
    std::vector<std::vector<double>> x(n, std::vector<double>(d));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) x[i][j] = (rows[i][j] - clf.mean[j]) * clf.inv_std[j];
        y[i] = labels[i] == Label::Abnormal ? 1.0 : -1.0;
    }

    // Curvature bound via power iteration on (2/n) X~'X~ over the weight+bias
    // coordinates; the squared hinge Hessian is at most that plus lambda.
    const std::size_t dd = d + 1;
    std::vector<double> v(dd, 1.0), hv(dd), scores(n);
    double lam_max = 1.0;
    for (int it = 0; it < 30; ++it) {
        double norm = 0.0;
        for (double c : v) norm += c * c;
        norm = std::sqrt(norm);
        if (norm == 0.0) break;
        for (double& c : v) c /= norm;
        for (std::size_t i = 0; i < n; ++i) {
            double s = v[d];
            for (std::size_t j = 0; j < d; ++j) s += x[i][j] * v[j];
            scores[i] = s;
        }
        std::fill(hv.begin(), hv.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) hv[j] += x[i][j] * scores[i];
            hv[d] += scores[i];
        }
        double rq = 0.0;
        for (std::size_t j = 0; j < dd; ++j) {
            hv[j] *= 2.0 / static_cast<double>(n);
            rq += hv[j] * v[j];
        }
        lam_max = std::max(rq, 1e-12);
        v = hv;
    }
    const double step = 1.0 / (1.05 * (lam_max + opts.lambda) + 1e-12);

    // Nesterov-accelerated full-batch descent.
    std::vector<double> w(dd, 0.0), look(dd, 0.0), grad(dd);
    for (int t = 0; t < opts.iterations; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = look[d];
            for (std::size_t j = 0; j < d; ++j) s += x[i][j] * look[j];
            scores[i] = s;
        }
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double margin = 1.0 - y[i] * scores[i];
            if (margin <= 0.0) continue;
            const double g = -2.0 * margin * y[i] / static_cast<double>(n);
            for (std::size_t j = 0; j < d; ++j) grad[j] += g * x[i][j];
            grad[d] += g;
        }
        for (std::size_t j = 0; j < d; ++j) grad[j] += opts.lambda * look[j];

        const double momentum = static_cast<double>(t) / static_cast<double>(t + 3);
        for (std::size_t j = 0; j < dd; ++j) {
            const double next = look[j] - step * grad[j];
            look[j] = next + momentum * (next - w[j]);
            w[j] = next;
        }
    }

    clf.weights.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(d));
    clf.bias = w[d];
    return clf;
}

double decision_value(const LinearClassifier& clf, const std::vector<double>& row) {
    if (row.size() != clf.weights.size())
        throw std::invalid_argument("feature width does not match classifier");
    double s = clf.bias;
    for (std::size_t j = 0; j < row.size(); ++j)
        s += clf.weights[j] * (row[j] - clf.mean[j]) * clf.inv_std[j];
    return s;
}

Label predict(const LinearClassifier& clf, const std::vector<double>& row) {
    return decision_value(clf, row) >= 0.0 ? Label::Abnormal : Label::Normal;
}

EvalReport cross_validate(const std::vector<std::vector<double>>& rows,
                          const std::vector<Label>& labels, int k, std::uint64_t seed,
                          const TrainOptions& opts) {
    check_matrix(rows, labels);
    EvalReport rep;
    rep.k = k;
    rep.seed = seed;
    rep.classifier = "l2-squared-hinge-gd(lambda=" + fmt("%g", opts.lambda) +
                     ",iterations=" + std::to_string(opts.iterations) + ")";
    rep.fold_assignment = stratified_kfold(labels, k, seed);

    std::vector<double> sens, spec;
    for (int f = 0; f < k; ++f) {
        std::vector<std::vector<double>> train_rows, test_rows;
        std::vector<Label> train_labels, test_labels;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rep.fold_assignment[i] == f) {
                test_rows.push_back(rows[i]);
                test_labels.push_back(labels[i]);
            } else {
                train_rows.push_back(rows[i]);
                train_labels.push_back(labels[i]);
            }
        }
        const LinearClassifier clf = train_baseline(train_rows, train_labels, opts);
        FoldResult fr;
        fr.fold = f;
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
            const Label got = predict(clf, test_rows[i]);
            if (test_labels[i] == Label::Abnormal)
                (got == Label::Abnormal ? fr.counts.tp : fr.counts.fn)++;
            else
                (got == Label::Normal ? fr.counts.tn : fr.counts.fp)++;
        }
        fr.sensitivity = sensitivity(fr.counts);
        fr.specificity = specificity(fr.counts);
        sens.push_back(fr.sensitivity);
        spec.push_back(fr.specificity);
        rep.folds.push_back(fr);
    }
    rep.mean_sensitivity = mean_of(sens);
    rep.std_sensitivity = pop_std_of(sens, rep.mean_sensitivity);
    rep.mean_specificity = mean_of(spec);
    rep.std_specificity = pop_std_of(spec, rep.mean_specificity);
    return rep;
}

std::string report_to_text(const EvalReport& r) {
    std::string out;
    out += "fold  tp  fn  tn  fp  sensitivity  specificity\n";
    char line[160];
    for (const auto& f : r.folds) {
        std::snprintf(line, sizeof line, "%4d %3zu %3zu %3zu %3zu %12.4f %12.4f\n", f.fold,
                      f.counts.tp, f.counts.fn, f.counts.tn, f.counts.fp, f.sensitivity,
                      f.specificity);
        out += line;
    }
    std::snprintf(line, sizeof line, "mean sensitivity %.4f (std %.4f)\n", r.mean_sensitivity,
                  r.std_sensitivity);
    out += line;
    std::snprintf(line, sizeof line, "mean specificity %.4f (std %.4f)\n", r.mean_specificity,
                  r.std_specificity);
    out += line;
    return out;
}

std::string report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["k"] = r.k;
    j["seed"] = r.seed;
    j["classifier"] = r.classifier;
    j["fold_assignment"] = r.fold_assignment;
    j["folds"] = nlohmann::json::array();
    for (const auto& f : r.folds) {
        nlohmann::json jf;
        jf["fold"] = f.fold;
        jf["tp"] = f.counts.tp;
        jf["fn"] = f.counts.fn;
        jf["tn"] = f.counts.tn;
        jf["fp"] = f.counts.fp;
        jf["sensitivity"] = f.sensitivity;
        jf["specificity"] = f.specificity;
        j["folds"].push_back(jf);
    }
    j["mean_sensitivity"] = r.mean_sensitivity;
    j["std_sensitivity"] = r.std_sensitivity;
    j["mean_specificity"] = r.mean_specificity;
    j["std_specificity"] = r.std_specificity;
    return j.dump(2) + "\n";
}

} // namespace topofeat
