#pragma once

#include <json.hpp>

#include <chrono>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fbd::lab {

struct ResultRecord {
    std::string experiment_id;
    std::string digest;
    std::string metric;
    double value = 0.0;
    std::optional<double> std_error;
    bool degenerate = false;  ///< value was not finite
    std::string label;        ///< optional text payload (checksums, flags)
    double wall_time = 0.0;
    std::string timestamp;

    nlohmann::json to_json() const;
    static ResultRecord from_json(const nlohmann::json& j);
};

/// Columnar sweep table; cells are numbers or strings.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<nlohmann::json>> rows;

    void add(std::vector<nlohmann::json> row);
    std::size_t column(const std::string& name) const;  ///< throws when absent
    std::string to_csv() const;
    static Table from_csv(const std::string& name, const std::string& text);
    static Table read(const std::string& path);
};

/// Records and tables of one experiment, held in memory until commit so a
/// failed run leaves nothing behind.
class RecordSet {
public:
    RecordSet() = default;
    RecordSet(std::string experiment_id, std::string digest);

    void add(const std::string& metric, double value, std::optional<double> std_error = std::nullopt,
             const std::string& label = "");
    void add_label(const std::string& metric, const std::string& label);
    Table& table(const std::string& name, std::vector<std::string> columns);
    /// Extra files written into the staging directory at commit.
    void attach(std::function<void(const std::string& dir)> writer);

    const std::vector<ResultRecord>& records() const { return records_; }
    const std::deque<Table>& tables() const { return tables_; }
    const std::string& experiment_id() const { return id_; }

    /// JSON lines without wall time and timestamp.
    std::string canonical_text() const;
    std::string jsonl() const;

    /// Writes dir/config.json, dir/records.jsonl and dir/tables/<name>.csv
    /// into a staging directory and renames it into place.
    void commit(const std::string& dir, const nlohmann::json& config) const;

private:
    std::string id_;
    std::string digest_;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
    std::vector<ResultRecord> records_;
    std::deque<Table> tables_;  ///< stable references for table()
    std::vector<std::function<void(const std::string&)>> artifacts_;
};

std::vector<ResultRecord> read_records(const std::string& path);
std::string utc_timestamp();

}  // namespace fbd::lab
