#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace lg4av::eval {

/// P(random positive outranks random negative), ties counted 1/2, via midranks.
/// Throws when only one class is present.
double auc(std::span<const double> scores, std::span<const int> labels);

struct AccuracyF1 {
    double accuracy = 0.0;
    double f1 = 0.0;
};

/// Predictions are score > threshold; f1 is 0 when precision + recall is 0.
AccuracyF1 accuracy_f1(std::span<const double> scores, std::span<const int> labels, double threshold);

struct MetricReport {
    double auc = 0.0;
    double accuracy = 0.0;
    double f1 = 0.0;
    std::size_t n_examples = 0;
    double threshold_used = 0.5;
};

MetricReport evaluate_scores(std::span<const double> scores, std::span<const int> labels, double threshold);

struct TTestResult {
    double t = 0.0;
    double p_two_sided = 0.0;
    std::size_t df = 0;
    double mean_difference = 0.0;
    /// Zero variance of the differences: t is infinite (or 0/0) and p is not meaningful.
    bool degenerate = false;
};

/// Paired t-test on a - b with n - 1 degrees of freedom.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

}  // namespace lg4av::eval
