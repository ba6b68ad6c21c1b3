#include "fbdrift/lab/records.hpp"

#include "fbdrift/common/errors.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fbd::lab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json ResultRecord::to_json() const {
    json j{{"experiment_id", experiment_id}, {"digest", digest}, {"metric", metric}};
    j["value"] = degenerate ? json() : json(value);
    j["std_error"] = std_error ? json(*std_error) : json();
    if (degenerate) j["degenerate"] = true;
    if (!label.empty()) j["label"] = label;
    j["wall_time"] = wall_time;
    j["timestamp"] = timestamp;
    return j;
}

ResultRecord ResultRecord::from_json(const json& j) {
    ResultRecord r;
    r.experiment_id = j.at("experiment_id").get<std::string>();
    r.digest = j.at("digest").get<std::string>();
    r.metric = j.at("metric").get<std::string>();
    r.degenerate = j.value("degenerate", false) || j.at("value").is_null();
    r.value = r.degenerate ? std::nan("") : j["value"].get<double>();
    if (j.contains("std_error") && !j["std_error"].is_null()) r.std_error = j["std_error"].get<double>();
    r.label = j.value("label", "");
    r.wall_time = j.value("wall_time", 0.0);
    r.timestamp = j.value("timestamp", "");
    return r;
}

void Table::add(std::vector<json> row) {
    if (row.size() != columns.size())
        throw InvalidArgument("table '" + name + "': row has " + std::to_string(row.size()) + " cells, expected " +
                              std::to_string(columns.size()));
    rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& c) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == c) return i;
    throw InvalidArgument("table '" + name + "' has no column '" + c + "'");
}

namespace {

std::string cell(const json& v) {
    if (v.is_null()) return "";
    if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
    if (v.is_number()) {
        const double x = v.get<double>();
        if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
    }
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

json parse_cell(const std::string& s) {
    if (s.empty()) return json();
    if (s == "nan") return std::nan("");
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end && *end == '\0') return v;
    return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("io-error", "cannot write " + p.string());
    f << text;
    if (!f) throw Error("io-error", "write failed: " + p.string());
}

}  // namespace

std::string Table::to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + cell(columns[i]);
    out += "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + cell(r[i]);
        out += "\n";
    }
    return out;
}

Table Table::from_csv(const std::string& name, const std::string& text) {
    Table t;
    t.name = name;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (header) {
            t.columns = cells;
            header = false;
            continue;
        }
        std::vector<json> row;
        for (const auto& c : cells) row.push_back(parse_cell(c));
        t.add(std::move(row));
    }
    return t;
}

Table Table::read(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("io-error", "cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_csv(fs::path(path).stem().string(), ss.str());
}

RecordSet::RecordSet(std::string experiment_id, std::string digest)
    : id_(std::move(experiment_id)), digest_(std::move(digest)) {}

void RecordSet::add(const std::string& metric, double value, std::optional<double> std_error, const std::string& label) {
    ResultRecord r;
    r.experiment_id = id_;
    r.digest = digest_;
    r.metric = metric;
    r.degenerate = !std::isfinite(value);
    r.value = value;
    if (std_error && std::isfinite(*std_error)) r.std_error = std_error;
    r.label = label;
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    r.timestamp = utc_timestamp();
    records_.push_back(std::move(r));
}

void RecordSet::add_label(const std::string& metric, const std::string& label) { add(metric, 0.0, std::nullopt, label); }

Table& RecordSet::table(const std::string& name, std::vector<std::string> columns) {
    for (auto& t : tables_)
        if (t.name == name) return t;
    tables_.push_back(Table{name, std::move(columns), {}});
    return tables_.back();
}

void RecordSet::attach(std::function<void(const std::string&)> writer) { artifacts_.push_back(std::move(writer)); }

std::string RecordSet::canonical_text() const {
    std::string out;
    for (const auto& r : records_) {
        json j = r.to_json();
        j.erase("wall_time");
        j.erase("timestamp");
        out += j.dump() + "\n";
    }
    for (const auto& t : tables_) out += "# " + t.name + "\n" + t.to_csv();
    return out;
}

std::string RecordSet::jsonl() const {
    std::string out;
    for (const auto& r : records_) out += r.to_json().dump() + "\n";
    return out;
}

void RecordSet::commit(const std::string& dir, const json& config) const {
    const fs::path target(dir);
    const fs::path staging = target.string() + ".partial";
    std::error_code ec;
    fs::remove_all(staging, ec);
    fs::create_directories(staging / "tables");
    try {
        write_file(staging / "config.json", config.dump(2) + "\n");
        write_file(staging / "records.jsonl", jsonl());
        for (const auto& t : tables_) write_file(staging / "tables" / (t.name + ".csv"), t.to_csv());
        for (const auto& a : artifacts_) a(staging.string());
        fs::remove_all(target);
        fs::rename(staging, target);
    } catch (...) {
        fs::remove_all(staging, ec);
        throw;
    }
}

std::vector<ResultRecord> read_records(const std::string& path) {
    fs::path p(path);
    if (fs::is_directory(p)) p /= "records.jsonl";
    std::ifstream f(p);
    if (!f) throw Error("io-error", "cannot read " + p.string());
    std::vector<ResultRecord> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        out.push_back(ResultRecord::from_json(json::parse(line)));
    }
    return out;
}

}  // namespace fbd::lab
