#include "reclab/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace reclab {

int Vocab::add_user(const std::string& id) {
    auto [it, inserted] = user_index.try_emplace(id, static_cast<int>(user_ids.size()));
    if (inserted) user_ids.push_back(id);
    return it->second;
}

int Vocab::add_item(const std::string& id) {
    auto [it, inserted] = item_index.try_emplace(id, static_cast<int>(item_ids.size()));
    if (inserted) item_ids.push_back(id);
    return it->second;
}

void Vocab::finalize() {
    std::vector<int> order(item_ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return item_ids[a] < item_ids[b]; });
    item_id_rank.assign(item_ids.size(), 0);
    for (size_t r = 0; r < order.size(); ++r) item_id_rank[order[r]] = static_cast<int>(r);
}

InteractionSet InteractionSet::from_interactions(const std::vector<Interaction>& rows) {
    auto vocab = std::make_shared<Vocab>();
    std::vector<Row> dense;
    dense.reserve(rows.size());
    // last occurrence wins for duplicate (user, item)
    std::unordered_map<int64_t, size_t> seen;
    for (const auto& r : rows) {
        int u = vocab->add_user(r.user);
        int i = vocab->add_item(r.item);
        Row row{u, i, r.value.value_or(0.0), r.timestamp.value_or(0),
                r.value.has_value(), r.timestamp.has_value()};
        int64_t key = (static_cast<int64_t>(u) << 32) | static_cast<uint32_t>(i);
        auto it = seen.find(key);
        if (it != seen.end()) {
            dense[it->second] = row;
        } else {
            seen.emplace(key, dense.size());
            dense.push_back(row);
        }
    }
    vocab->finalize();
    InteractionSet out;
    out.vocab_ = std::move(vocab);
    out.rows_ = std::move(dense);
    out.build_user_lists();
    return out;
}

InteractionSet InteractionSet::from_rows(std::shared_ptr<const Vocab> vocab, std::vector<Row> rows) {
    InteractionSet out;
    out.vocab_ = std::move(vocab);
    out.rows_ = std::move(rows);
    out.build_user_lists();
    return out;
}

void InteractionSet::build_user_lists() {
    by_user_.assign(vocab_->user_ids.size(), {});
    for (const auto& r : rows_) by_user_[r.user].emplace_back(r.item, r.value);
    for (auto& lst : by_user_) std::sort(lst.begin(), lst.end());
}

std::optional<int> InteractionSet::user_index(const std::string& id) const {
    auto it = vocab_->user_index.find(id);
    if (it == vocab_->user_index.end()) return std::nullopt;
    return it->second;
}

std::optional<int> InteractionSet::item_index(const std::string& id) const {
    auto it = vocab_->item_index.find(id);
    if (it == vocab_->item_index.end()) return std::nullopt;
    return it->second;
}

ColumnFormat format_preset(const std::string& name) {
    if (name == "ml100k") return ColumnFormat{'\t', 0, 1, 2, 3, false};
    if (name == "csv") return ColumnFormat{',', 0, 1, 2, -1, false};
    if (name == "csv-implicit") return ColumnFormat{',', 0, 1, -1, -1, false};
    throw DataError("unknown format preset: " + name);
}

namespace {

std::vector<std::string_view> split_line(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view s, size_t lineno) {
    double v;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw DataError("malformed numeric field at line " + std::to_string(lineno));
    return v;
}

int64_t parse_int(std::string_view s, size_t lineno) {
    int64_t v;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw DataError("malformed integer field at line " + std::to_string(lineno));
    return v;
}

}  // namespace

InteractionSet load_interactions(const std::filesystem::path& path, const ColumnFormat& fmt) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());

    int max_col = std::max({fmt.user_col, fmt.item_col, fmt.rating_col, fmt.timestamp_col});
    std::vector<Interaction> rows;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (fmt.header && lineno == 1) continue;
        if (line.empty()) continue;
        auto fields = split_line(line, fmt.delimiter);
        if (static_cast<int>(fields.size()) <= max_col)
            throw DataError("malformed row at line " + std::to_string(lineno) + " in " +
                            path.string() + ": expected at least " + std::to_string(max_col + 1) +
                            " fields");
        Interaction r;
        r.user = std::string(fields[fmt.user_col]);
        r.item = std::string(fields[fmt.item_col]);
        if (r.user.empty() || r.item.empty())
            throw DataError("empty user or item id at line " + std::to_string(lineno));
        if (fmt.rating_col >= 0) r.value = parse_double(fields[fmt.rating_col], lineno);
        if (fmt.timestamp_col >= 0) r.timestamp = parse_int(fields[fmt.timestamp_col], lineno);
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw DataError("empty dataset: " + path.string());
    return InteractionSet::from_interactions(rows);
}

double gini_index(std::span<const double> counts) {
    if (counts.size() < 2) throw DataError("gini_index requires at least 2 entries");
    std::vector<double> sorted(counts.begin(), counts.end());
    for (double c : sorted)
        if (c < 0.0) throw DataError("gini_index requires non-negative counts");
    std::sort(sorted.begin(), sorted.end());
    double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
    if (total <= 0.0) throw DataError("gini_index requires a positive total count");
    const double n = static_cast<double>(sorted.size());
    double weighted = 0.0;
    for (size_t i = 0; i < sorted.size(); ++i)
        weighted += static_cast<double>(i + 1) * sorted[i];
    return 2.0 * weighted / (n * total) - (n + 1.0) / n;
}

DatasetSummary summarize(const InteractionSet& data, const std::string& name) {
    if (data.empty()) throw DataError("cannot summarize an empty dataset");
    DatasetSummary s;
    s.name = name;
    s.n_ratings = data.size();
    s.n_users = data.n_users();
    s.n_items = data.n_items();
    s.density = static_cast<double>(s.n_ratings) /
                (static_cast<double>(s.n_users) * static_cast<double>(s.n_items));
    auto pop = item_popularity(data);
    std::vector<double> counts(pop.counts.begin(), pop.counts.end());
    s.gini = gini_index(counts);
    return s;
}

ItemPopularity item_popularity(const InteractionSet& data) {
    ItemPopularity out;
    out.counts.assign(data.n_items(), 0);
    for (const auto& r : data.rows()) ++out.counts[r.item];

    const size_t n = out.counts.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return out.counts[a] < out.counts[b]; });
    out.ranks.assign(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && out.counts[order[j]] == out.counts[order[i]]) ++j;
        // positions i+1 .. j (1-based); ties share the midrank
        double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (size_t k = i; k < j; ++k) out.ranks[order[k]] = mid;
        i = j;
    }
    return out;
}

std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

std::string summary_csv_header() { return "dataset,n_ratings,n_users,n_items,density,gini"; }

std::string summary_csv_row(const DatasetSummary& s) {
    std::ostringstream os;
    os << s.name << ',' << s.n_ratings << ',' << s.n_users << ',' << s.n_items << ','
       << format_double(s.density) << ',' << format_double(s.gini);
    return os.str();
}

}  // namespace reclab
