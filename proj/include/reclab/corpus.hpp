#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace reclab {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Interaction {
    std::string user;
    std::string item;
    std::optional<double> value;
    std::optional<int64_t> timestamp;
};

// Shared id<->dense-index vocabulary. Subsets produced by splitting share the
// parent's vocabulary so dense indices stay comparable across train/test.
struct Vocab {
    std::vector<std::string> user_ids;  // dense index -> id
    std::vector<std::string> item_ids;
    std::unordered_map<std::string, int> user_index;
    std::unordered_map<std::string, int> item_index;
    std::vector<int> item_id_rank;  // dense index -> rank of item id (ascending), for tie-breaks

    int add_user(const std::string& id);
    int add_item(const std::string& id);
    void finalize();  // computes item_id_rank
};

class InteractionSet {
public:
    struct Row {
        int user;
        int item;
        double value;
        int64_t timestamp;
        bool has_value;
        bool has_timestamp;
    };

    InteractionSet() = default;

    // Builds vocabulary from scratch; duplicate (user, item) keeps the last row.
    static InteractionSet from_interactions(const std::vector<Interaction>& rows);
    // Rows already expressed in an existing vocabulary (no dedup performed).
    static InteractionSet from_rows(std::shared_ptr<const Vocab> vocab, std::vector<Row> rows);

    size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }
    size_t n_users() const { return vocab_->user_ids.size(); }
    size_t n_items() const { return vocab_->item_ids.size(); }

    const std::vector<Row>& rows() const { return rows_; }
    const std::shared_ptr<const Vocab>& vocab() const { return vocab_; }

    const std::string& user_id(int idx) const { return vocab_->user_ids.at(idx); }
    const std::string& item_id(int idx) const { return vocab_->item_ids.at(idx); }
    std::optional<int> user_index(const std::string& id) const;
    std::optional<int> item_index(const std::string& id) const;

    // Per-user (item, value) lists, item index ascending.
    const std::vector<std::vector<std::pair<int, double>>>& by_user() const { return by_user_; }

private:
    std::shared_ptr<const Vocab> vocab_ = std::make_shared<Vocab>();
    std::vector<Row> rows_;
    std::vector<std::vector<std::pair<int, double>>> by_user_;

    void build_user_lists();
};

struct DatasetSummary {
    std::string name;
    size_t n_ratings = 0;
    size_t n_users = 0;
    size_t n_items = 0;
    double density = 0.0;
    double gini = 0.0;
};

struct ColumnFormat {
    char delimiter = ',';
    int user_col = 0;
    int item_col = 1;
    int rating_col = 2;     // -1 for none
    int timestamp_col = 3;  // -1 for none
    bool header = false;
};

// Presets: "ml100k" (tab-delimited user/item/rating/timestamp, no header),
// "csv" (comma, user/item/rating/timestamp, header), "csv-implicit" (user,item).
ColumnFormat format_preset(const std::string& name);

InteractionSet load_interactions(const std::filesystem::path& path, const ColumnFormat& fmt);

DatasetSummary summarize(const InteractionSet& data, const std::string& name = "");

// Gini concentration of a count vector; sorted-vector formula, needs >= 2
// entries with positive sum.
double gini_index(std::span<const double> counts);

struct ItemPopularity {
    std::vector<long long> counts;  // per dense item index
    std::vector<double> ranks;      // ascending by count, rank 1 = least popular, ties get midrank
};

ItemPopularity item_popularity(const InteractionSet& data);

std::string summary_csv_header();
std::string summary_csv_row(const DatasetSummary& s);

// Shortest round-trip formatting, used everywhere CSV output must be byte-stable.
std::string format_double(double v);

}  // namespace reclab
