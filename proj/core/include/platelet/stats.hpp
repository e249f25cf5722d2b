#pragma once

#include <array>
#include <string>
#include <vector>

namespace platelet::stats {

// Quantile by linear interpolation between order statistics: position
// (n-1)*p in the sorted data (the convention recorded in report metadata).
double quantile_sorted(const std::vector<double>& sorted, double p);
double quantile(std::vector<double> values, double p);
double median(std::vector<double> values);
double mean(const std::vector<double>& values);
double sample_sd(const std::vector<double>& values);  // n-1 denominator

struct KwResult {
    double h = 0;  // tie-corrected statistic
    double p = 1;  // chi-square upper tail, df = groups - 1
};

// Rank-based k-group test of equal medians; average ranks on ties. All
// values identical makes the tie correction degenerate and throws.
KwResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

// Benjamini-Hochberg step-up adjustment, returned in input order.
std::vector<double> bh_adjust(const std::vector<double>& pvalues);

// Energy score as the unnormalized double sum
//   2 * sum_i ||x_i - x0||^beta  -  sum_{i,j} ||x_i - x_j||^beta
// over all ordered pairs (i,j). `normalized` switches to the 2/n, 1/n^2
// Monte Carlo form for cross-checking.
double energy_score(const std::vector<std::vector<double>>& predictions,
                    const std::vector<double>& x_obs, double beta = 1.0,
                    bool normalized = false);

// Fraction of item pairs on which the two partitions agree.
double rand_index(const std::vector<int>& labels_a, const std::vector<int>& labels_b);

struct HclustResult {
    std::vector<int> labels;                    // 0..n_clusters-1, by first member
    std::vector<std::array<int, 2>> merges;     // (min item of each side), in merge order
};

// Agglomerative clustering, average linkage, ties broken by the smallest
// pair of cluster-representative item indices; deterministic.
HclustResult hierarchical_cluster(const std::vector<std::vector<double>>& points,
                                  int n_clusters);

struct BoxplotStats {
    double q1 = 0, med = 0, q3 = 0;
    double whisker_lo = 0, whisker_hi = 0;  // most extreme data within 1.5*IQR
    std::vector<double> outliers;
};
BoxplotStats boxplot_stats(std::vector<double> values);

enum class Label { healthy, disease };

// Nearest group median wins; exact tie goes to healthy.
Label classify_pathology(double value, double median_healthy, double median_disease);

struct PathologyResult {
    std::vector<Label> predicted;
    long tp = 0, fp = 0, tn = 0, fn = 0;
    double sensitivity = 0;  // TP / (TP + FN)
    double specificity = 0;  // TN / (TN + FP)
    std::string parameter;
    double median_healthy = 0, median_disease = 0;
};

PathologyResult confusion_metrics(const std::vector<Label>& predicted,
                                  const std::vector<Label>& truth);

}  // namespace platelet::stats
