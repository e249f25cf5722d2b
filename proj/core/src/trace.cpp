#include "platelet/trace.hpp"

#include <sstream>
#include <stdexcept>

#include "platelet/io_util.hpp"

namespace platelet {

std::vector<double> DepositionTrace::series(std::size_t index) const {
    if (index > 2) throw std::out_of_range("observable index must be 0, 1 or 2");
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto& r : rows) {
        switch (index) {
            case 0: v.push_back(r.n_agg_clust); break;
            case 1: v.push_back(r.s_agg_clust); break;
            default: v.push_back(r.n_platelet); break;
        }
    }
    return v;
}

std::string trace_to_csv(const DepositionTrace& trace) {
    std::ostringstream out;
    out << "t,n_agg_clust_per_mm2,s_agg_clust_um2,n_platelet_per_ul\n";
    out << "0,0,0," << io::fmt(trace.n_platelet_0) << "\n";
    for (const auto& r : trace.rows) {
        out << io::fmt(r.t) << ',' << io::fmt(r.n_agg_clust) << ','
            << io::fmt(r.s_agg_clust) << ',' << io::fmt(r.n_platelet) << "\n";
    }
    return out.str();
}

DepositionTrace trace_from_csv_text(const std::string& text, double n_platelet_0,
                                    double n_act_platelet_0) {
    DepositionTrace trace;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("trace csv: empty file");
    if (io::trim(line) != "t,n_agg_clust_per_mm2,s_agg_clust_um2,n_platelet_per_ul")
        throw std::runtime_error("trace csv: unexpected header '" + line + "'");
    bool saw_t0 = false;
    while (std::getline(in, line)) {
        if (io::trim(line).empty()) continue;
        const auto f = io::split(line, ',');
        if (f.size() != 4) throw std::runtime_error("trace csv: bad row '" + line + "'");
        ObservationRow r{io::parse_double(f[0]), io::parse_double(f[1]),
                         io::parse_double(f[2]), io::parse_double(f[3])};
        if (r.t == 0) {
            trace.n_platelet_0 = r.n_platelet;
            saw_t0 = true;
        } else {
            trace.rows.push_back(r);
        }
    }
    if (n_platelet_0 >= 0) trace.n_platelet_0 = n_platelet_0;
    else if (!saw_t0 && !trace.rows.empty())
        trace.n_platelet_0 = trace.rows.front().n_platelet;
    trace.n_act_platelet_0 = n_act_platelet_0 >= 0 ? n_act_platelet_0 : 0.0;
    if (trace.rows.empty()) throw std::runtime_error("trace csv: no observation rows");
    return trace;
}

void write_trace_csv(const DepositionTrace& trace, const std::string& path) {
    io::write_file(path, trace_to_csv(trace));
}

DepositionTrace read_trace_csv(const std::string& path) {
    return trace_from_csv_text(io::read_file(path));
}

}  // namespace platelet
