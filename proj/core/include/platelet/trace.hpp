#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace platelet {

// One observation row of the deposition pattern.
struct ObservationRow {
    double t = 0;            // [s]
    double n_agg_clust = 0;  // clusters per mm^2
    double s_agg_clust = 0;  // average cluster area [um^2]
    double n_platelet = 0;   // non-activated platelets still in suspension [1/ul]
};

// The simulator observable: (N_agg_clust, S_agg_clust, N_platelet) at each
// observation time, plus the initial suspension counts.
struct DepositionTrace {
    double n_platelet_0 = 0;      // initial NAP density [1/ul]
    double n_act_platelet_0 = 0;  // initial AP density [1/ul]
    std::vector<ObservationRow> rows;

    // Flattened (n_agg, s_agg, n_plt) per observation time; 9 values for the
    // standard three-time protocol.
    std::vector<double> flatten() const {
        std::vector<double> v;
        v.reserve(rows.size() * 3);
        for (const auto& r : rows) {
            v.push_back(r.n_agg_clust);
            v.push_back(r.s_agg_clust);
            v.push_back(r.n_platelet);
        }
        return v;
    }

    // Series of one observable across the observation times.
    // index: 0 = n_agg_clust, 1 = s_agg_clust, 2 = n_platelet
    std::vector<double> series(std::size_t index) const;

    bool operator==(const DepositionTrace&) const = default;
};

// CSV with header `t,n_agg_clust_per_mm2,s_agg_clust_um2,n_platelet_per_ul`,
// one row per observation time plus t=0.
std::string trace_to_csv(const DepositionTrace& trace);
DepositionTrace trace_from_csv_text(const std::string& text,
                                    double n_platelet_0 = -1,
                                    double n_act_platelet_0 = -1);
void write_trace_csv(const DepositionTrace& trace, const std::string& path);
DepositionTrace read_trace_csv(const std::string& path);

}  // namespace platelet
