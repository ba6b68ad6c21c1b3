#include "fbdrift/lab/plotdata.hpp"

#include "fbdrift/common/errors.hpp"

#include <algorithm>
#include <filesystem>
#include <map>

namespace fbd::lab {

namespace fs = std::filesystem;

namespace {

struct View {
    std::string table;
    std::vector<std::string> source;  ///< source columns, in output order
    std::vector<std::string> output;
    bool split_by_r = false;
};

const std::map<std::string, View>& views() {
    static const std::map<std::string, View> v{
        {"prop2i", {"flow", {"t", "norm", "envelope"}, {"t", "norm", "envelope"}, true}},
        {"prop2ii", {"malliavin", {"gap", "norm", "envelope"}, {"t_minus_s", "norm", "envelope"}, true}},
        {"prop2iii", {"malliavin_gap", {"gap", "norm", "envelope"}, {"s_gap", "norm", "envelope"}, true}},
        {"prop1", {"levels", {"n", "U2_terminal", "geometric_fit"}, {"n", "U2_terminal", "geometric_fit"}, false}},
        {"cascade-energy", {"energies", {"k", "E_k", "ratio"}, {"n", "energy", "ratio"}, false}},
        {"cascade-length", {"lengths", {"length", "U2_terminal"}, {"length", "U2_terminal"}, false}},
        {"criticality",
         {"criticality", {"delta", "collapse_fraction", "stderr"}, {"delta", "collapse_fraction", "stderr"}, false}},
        {"convergence",
         {"pairs", {"m", "median_gap", "surrogate", "envelope"}, {"m", "median_gap", "surrogate", "envelope"}, false}},
        {"mollify",
         {"levels",
          {"m", "distance", "truncation_error_sq", "analytic_truncation_sq"},
          {"m", "distance", "truncation_error_sq", "analytic_truncation_sq"},
          false}},
        {"regularity",
         {"moduli", {"modulus", "gap", "moment", "envelope"}, {"modulus", "gap", "moment", "envelope"}, false}},
    };
    return v;
}

const View& lookup(const std::string& view) {
    const auto it = views().find(view);
    if (it == views().end()) {
        std::string known;
        for (const auto& [k, _] : views()) known += (known.empty() ? "" : ", ") + k;
        throw InvalidArgument("unknown view '" + view + "' (known: " + known + ")");
    }
    return it->second;
}

}  // namespace

const std::vector<std::string>& plot_views() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& [k, _] : views()) n.push_back(k);
        return n;
    }();
    return names;
}

std::vector<std::string> view_columns(const std::string& view) { return lookup(view).output; }

std::vector<Table> emit_plotdata(const std::string& records_path, const std::string& view) {
    const View& v = lookup(view);
    fs::path dir(records_path);
    if (!fs::is_directory(dir)) dir = dir.parent_path();
    const fs::path src = dir / "tables" / (v.table + ".csv");
    const Table empty{view, v.output, {}};
    if (!fs::exists(src)) return {empty};
    const Table t = Table::read(src.string());
    if (t.rows.empty()) return {empty};
    // Tables from other experiment kinds may share the name (e.g. "levels").
    for (const auto& c : v.source)
        if (std::find(t.columns.begin(), t.columns.end(), c) == t.columns.end()) return {empty};

    std::vector<std::size_t> idx;
    for (const auto& c : v.source) idx.push_back(t.column(c));
    std::vector<Table> out;
    std::map<long long, std::size_t> by_r;
    for (const auto& row : t.rows) {
        std::size_t slot = 0;
        if (v.split_by_r) {
            const long long r = row[t.column("r")].get<long long>();
            auto it = by_r.find(r);
            if (it == by_r.end()) {
                it = by_r.emplace(r, out.size()).first;
                out.push_back(Table{view + "_r" + std::to_string(r), v.output, {}});
            }
            slot = it->second;
        } else if (out.empty()) {
            out.push_back(Table{view, v.output, {}});
        }
        std::vector<nlohmann::json> cells;
        for (std::size_t i : idx) cells.push_back(row[i]);
        out[slot].add(std::move(cells));
    }
    return out;
}

}  // namespace fbd::lab
