#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mlpeval/data.hpp"
#include "mlpeval/error.hpp"
#include "mlpeval/network.hpp"
#include "mlpeval/training.hpp"

namespace mlpeval {

/// A measure that is either a real number or could not be obtained because a
/// defining denominator was zero. Undefined renders as "--".
class MetricValue {
public:
    MetricValue() = default;
    static MetricValue defined(double v) { return MetricValue(v); }
    static MetricValue undefined() { return {}; }

    /// num / den, or Undefined when den == 0.
    static MetricValue ratio(std::uint64_t num, std::uint64_t den) {
        if (den == 0) return undefined();
        return defined(static_cast<double>(num) / static_cast<double>(den));
    }

    bool is_defined() const noexcept { return value_.has_value(); }
    double value() const {
        if (!value_) throw Error("value of an undefined metric");
        return *value_;
    }

    friend bool operator==(const MetricValue&, const MetricValue&) = default;

private:
    explicit MetricValue(double v) : value_(v) {}
    std::optional<double> value_;
};

inline constexpr std::string_view undefined_marker = "--";

/// Rows are the true class, columns the predicted class.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t m) : m_(m), counts_(m * m, 0) {
        if (m == 0) throw Error("confusion matrix needs at least one class");
    }
    ConfusionMatrix(std::size_t m, std::vector<std::uint64_t> counts) : m_(m), counts_(std::move(counts)) {
        if (m == 0 || counts_.size() != m * m) throw Error("confusion matrix counts must be m x m");
    }

    std::size_t m() const noexcept { return m_; }
    std::uint64_t& at(std::size_t truth, std::size_t pred) { return counts_[truth * m_ + pred]; }
    std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * m_ + pred]; }

    std::uint64_t total() const noexcept {
        std::uint64_t n = 0;
        for (auto c : counts_) n += c;
        return n;
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t m_ = 0;
    std::vector<std::uint64_t> counts_;
};

struct ClassCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct PerClassCounts {
    std::uint64_t n = 0;
    std::vector<ClassCounts> classes;

    std::size_t m() const noexcept { return classes.size(); }
};

inline ConfusionMatrix confusion_from_predictions(std::span<const std::size_t> truth,
                                                  std::span<const std::size_t> pred, std::size_t m) {
    if (truth.size() != pred.size()) {
        throw Error("truth and prediction lists differ in length");
    }
    ConfusionMatrix cm(m);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= m || pred[i] >= m) {
            throw Error("label out of range at position " + std::to_string(i));
        }
        ++cm.at(truth[i], pred[i]);
    }
    return cm;
}

inline PerClassCounts per_class_counts(const ConfusionMatrix& cm) {
    PerClassCounts out;
    out.n = cm.total();
    out.classes.resize(cm.m());
    for (std::size_t i = 0; i < cm.m(); ++i) {
        std::uint64_t row = 0, col = 0;
        for (std::size_t j = 0; j < cm.m(); ++j) {
            row += cm.at(i, j);
            col += cm.at(j, i);
        }
        auto& c = out.classes[i];
        c.tp = cm.at(i, i);
        c.fn = row - c.tp;
        c.fp = col - c.tp;
        c.tn = out.n - c.tp - c.fn - c.fp;
    }
    return out;
}

struct BinaryMetrics {
    MetricValue accuracy;
    MetricValue sensitivity;
    MetricValue specificity;
    MetricValue precision;
    MetricValue fscore;
};

inline BinaryMetrics binary_metrics(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn,
                                    double beta = 1.0) {
    if (tp + fp + fn + tn == 0) throw Error("binary_metrics: all counts are zero");
    const double b2 = beta * beta;
    const double f_den = (b2 + 1.0) * static_cast<double>(tp) + b2 * static_cast<double>(fn) +
                         static_cast<double>(fp);
    return {
        MetricValue::ratio(tp + tn, tp + fp + fn + tn),
        MetricValue::ratio(tp, tp + fn),
        MetricValue::ratio(tn, fp + tn),
        MetricValue::ratio(tp, tp + fp),
        f_den == 0.0 ? MetricValue::undefined()
                     : MetricValue::defined((b2 + 1.0) * static_cast<double>(tp) / f_den),
    };
}

/// Mean over classes of (tp_i + tn_i) / n.
inline MetricValue average_accuracy(const PerClassCounts& pcc) {
    if (pcc.m() == 0 || pcc.n == 0) return MetricValue::undefined();
    double sum = 0.0;
    for (const auto& c : pcc.classes) {
        sum += static_cast<double>(c.tp + c.tn) / static_cast<double>(c.tp + c.fn + c.fp + c.tn);
    }
    return MetricValue::defined(sum / static_cast<double>(pcc.m()));
}

enum class RateKind { precision, specificity, sensitivity };

namespace detail {

struct Fraction {
    std::uint64_t num;
    std::uint64_t den;
};

inline Fraction rate_terms(const ClassCounts& c, RateKind kind) {
    switch (kind) {
        case RateKind::precision: return {c.tp, c.tp + c.fp};
        case RateKind::specificity: return {c.tn, c.fp + c.tn};
        case RateKind::sensitivity: return {c.tp, c.tp + c.fn};
    }
    return {0, 0};
}

}  // namespace detail

/// Pooled numerators over pooled denominators.
inline MetricValue micro_average(const PerClassCounts& pcc, RateKind kind) {
    std::uint64_t num = 0, den = 0;
    for (const auto& c : pcc.classes) {
        const auto f = detail::rate_terms(c, kind);
        num += f.num;
        den += f.den;
    }
    return MetricValue::ratio(num, den);
}

/// Classes that occur in the evaluated truth labels (tp_i + fn_i > 0).
inline std::vector<std::size_t> evaluable_classes(const PerClassCounts& pcc) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pcc.m(); ++i) {
        if (pcc.classes[i].tp + pcc.classes[i].fn > 0) out.push_back(i);
    }
    return out;
}

/// Mean of per-class rates over `evaluable`. A zero denominator in any of
/// those classes makes the whole average Undefined.
inline MetricValue macro_average(const PerClassCounts& pcc, RateKind kind,
                                 std::span<const std::size_t> evaluable) {
    if (evaluable.empty()) throw Error("macro_average: no evaluable classes");
    double sum = 0.0;
    for (auto i : evaluable) {
        if (i >= pcc.m()) throw Error("macro_average: class index out of range");
        const auto f = detail::rate_terms(pcc.classes[i], kind);
        if (f.den == 0) return MetricValue::undefined();
        sum += static_cast<double>(f.num) / static_cast<double>(f.den);
    }
    return MetricValue::defined(sum / static_cast<double>(evaluable.size()));
}

inline MetricValue macro_average(const PerClassCounts& pcc, RateKind kind) {
    const auto evaluable = evaluable_classes(pcc);
    return macro_average(pcc, kind, evaluable);
}

/// Weighted harmonic mean (b^2 + 1) P R / (b^2 P + R).
inline MetricValue f_score(const MetricValue& precision, const MetricValue& recall, double beta = 1.0) {
    if (!precision.is_defined() || !recall.is_defined()) return MetricValue::undefined();
    const double p = precision.value(), r = recall.value();
    const double b2 = beta * beta;
    const double den = b2 * p + r;
    if (den == 0.0) return MetricValue::defined(0.0);
    return MetricValue::defined((b2 + 1.0) * p * r / den);
}

/// F-score of the pooled counts. Equal to f_score(micro precision, micro
/// recall) but computed from integers, so it reproduces P = R exactly for
/// beta = 1.
inline MetricValue micro_f_score(const PerClassCounts& pcc, double beta = 1.0) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (const auto& c : pcc.classes) {
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
    }
    const double b2 = beta * beta;
    const double den = (b2 + 1.0) * static_cast<double>(tp) + b2 * static_cast<double>(fn) +
                       static_cast<double>(fp);
    if (den == 0.0) return MetricValue::undefined();
    return MetricValue::defined((b2 + 1.0) * static_cast<double>(tp) / den);
}

/// The twelve measures of one evaluated run, in report row order.
struct MetricsReport {
    double mse_train = 0.0;
    double time_train_s = 0.0;
    double mse_test = 0.0;
    MetricValue accuracy;
    MetricValue precision_micro;
    MetricValue precision_macro;
    MetricValue specificity_micro;
    MetricValue specificity_macro;
    MetricValue sensitivity_micro;
    MetricValue sensitivity_macro;
    MetricValue fscore_micro;
    MetricValue fscore_macro;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

enum class Measure {
    mse_train,
    time_train,
    mse_test,
    accuracy,
    precision_micro,
    precision_macro,
    specificity_micro,
    specificity_macro,
    sensitivity_micro,
    sensitivity_macro,
    fscore_micro,
    fscore_macro,
};

struct MeasureInfo {
    Measure measure;
    std::string_view key;    // JSON field name
    std::string_view label;  // table row label
};

inline constexpr std::array<MeasureInfo, 12> all_measures{{
    {Measure::mse_train, "mse_train", "MSE_train"},
    {Measure::time_train, "time_train_s", "Time_train"},
    {Measure::mse_test, "mse_test", "MSE_test"},
    {Measure::accuracy, "accuracy", "Accuracy"},
    {Measure::precision_micro, "precision_micro", "Precision_mu"},
    {Measure::precision_macro, "precision_macro", "Precision_M"},
    {Measure::specificity_micro, "specificity_micro", "Specificity_mu"},
    {Measure::specificity_macro, "specificity_macro", "Specificity_M"},
    {Measure::sensitivity_micro, "sensitivity_micro", "Sensitivity_mu"},
    {Measure::sensitivity_macro, "sensitivity_macro", "Sensitivity_M"},
    {Measure::fscore_micro, "fscore_micro", "F-score_mu"},
    {Measure::fscore_macro, "fscore_macro", "F-score_M"},
}};

/// True for the nine ratio measures bounded to [0, 1].
inline constexpr bool is_rate(Measure m) {
    return m != Measure::mse_train && m != Measure::time_train && m != Measure::mse_test;
}

inline MetricValue measure_value(const MetricsReport& r, Measure m) {
    switch (m) {
        case Measure::mse_train: return MetricValue::defined(r.mse_train);
        case Measure::time_train: return MetricValue::defined(r.time_train_s);
        case Measure::mse_test: return MetricValue::defined(r.mse_test);
        case Measure::accuracy: return r.accuracy;
        case Measure::precision_micro: return r.precision_micro;
        case Measure::precision_macro: return r.precision_macro;
        case Measure::specificity_micro: return r.specificity_micro;
        case Measure::specificity_macro: return r.specificity_macro;
        case Measure::sensitivity_micro: return r.sensitivity_micro;
        case Measure::sensitivity_macro: return r.sensitivity_macro;
        case Measure::fscore_micro: return r.fscore_micro;
        case Measure::fscore_macro: return r.fscore_macro;
    }
    return {};
}

inline MetricValue* measure_slot(MetricsReport& r, Measure m) {
    switch (m) {
        case Measure::accuracy: return &r.accuracy;
        case Measure::precision_micro: return &r.precision_micro;
        case Measure::precision_macro: return &r.precision_macro;
        case Measure::specificity_micro: return &r.specificity_micro;
        case Measure::specificity_macro: return &r.specificity_macro;
        case Measure::sensitivity_micro: return &r.sensitivity_micro;
        case Measure::sensitivity_macro: return &r.sensitivity_macro;
        case Measure::fscore_micro: return &r.fscore_micro;
        case Measure::fscore_macro: return &r.fscore_macro;
        default: return nullptr;
    }
}

inline void to_json(nlohmann::json& j, const MetricValue& v) {
    if (v.is_defined()) {
        j = v.value();
    } else {
        j = std::string(undefined_marker);
    }
}

inline void from_json(const nlohmann::json& j, MetricValue& v) {
    if (j.is_string()) {
        if (j.get<std::string>() != undefined_marker) throw Error("unexpected metric string " + j.dump());
        v = MetricValue::undefined();
    } else {
        v = MetricValue::defined(j.get<double>());
    }
}

inline void to_json(nlohmann::json& j, const MetricsReport& r) {
    j = nlohmann::json::object();
    for (const auto& info : all_measures) {
        j[std::string(info.key)] = measure_value(r, info.measure);
    }
}

inline void from_json(const nlohmann::json& j, MetricsReport& r) {
    r.mse_train = j.at("mse_train").get<double>();
    r.time_train_s = j.contains("time_train_s") ? j.at("time_train_s").get<double>() : 0.0;
    r.mse_test = j.at("mse_test").get<double>();
    for (const auto& info : all_measures) {
        if (auto* slot = measure_slot(r, info.measure)) {
            *slot = j.at(std::string(info.key)).get<MetricValue>();
        }
    }
}

/// Fills every measure from truth/prediction label lists.
inline MetricsReport metrics_from_labels(std::span<const std::size_t> truth, std::span<const std::size_t> pred,
                                         std::size_t m, double beta = 1.0) {
    const auto pcc = per_class_counts(confusion_from_predictions(truth, pred, m));
    MetricsReport r;
    r.accuracy = average_accuracy(pcc);
    r.precision_micro = micro_average(pcc, RateKind::precision);
    r.specificity_micro = micro_average(pcc, RateKind::specificity);
    r.sensitivity_micro = micro_average(pcc, RateKind::sensitivity);
    const auto evaluable = evaluable_classes(pcc);
    r.precision_macro = macro_average(pcc, RateKind::precision, evaluable);
    r.specificity_macro = macro_average(pcc, RateKind::specificity, evaluable);
    r.sensitivity_macro = macro_average(pcc, RateKind::sensitivity, evaluable);
    r.fscore_micro = micro_f_score(pcc, beta);
    r.fscore_macro = f_score(r.precision_macro, r.sensitivity_macro, beta);
    return r;
}

inline MetricsReport evaluate(const MlpNetwork& net, const Dataset& data, std::span<const std::size_t> test_indices,
                              double mse_train, double time_train_s, double beta = 1.0, double c = 1.0) {
    if (test_indices.empty()) throw Error("evaluate: empty test set");
    if (net.n_out != data.m()) throw Error("evaluate: network outputs do not match class count");
    std::vector<std::size_t> truth, pred;
    truth.reserve(test_indices.size());
    pred.reserve(test_indices.size());
    Activation act;
    for (auto idx : test_indices) {
        forward_into(net, data.features.row(idx), act, c);
        truth.push_back(data.labels.at(idx));
        pred.push_back(argmax(act.output));
    }
    auto r = metrics_from_labels(truth, pred, data.m(), beta);
    r.mse_train = mse_train;
    r.time_train_s = time_train_s;
    r.mse_test = mse(net, data, test_indices, c);
    return r;
}

inline MetricsReport evaluate(const MlpNetwork& net, std::span<const TrainingExample> test, double mse_train,
                              double time_train_s, double beta = 1.0, double c = 1.0) {
    if (test.empty()) throw Error("evaluate: empty test set");
    std::vector<std::size_t> truth, pred;
    for (const auto& ex : test) {
        if (ex.t.size() != net.n_out) throw Error("target length does not match network outputs");
        truth.push_back(argmax(ex.t));
        pred.push_back(predict(net, ex.x, c));
    }
    auto r = metrics_from_labels(truth, pred, net.n_out, beta);
    r.mse_train = mse_train;
    r.time_train_s = time_train_s;
    r.mse_test = mse(net, test, c);
    return r;
}

}  // namespace mlpeval
