#include "reclab/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "reclab/rng.hpp"

namespace reclab {

SplitPlan crossfold_users(const InteractionSet& data, int n_folds, double test_fraction,
                          int min_ratings, uint64_t seed) {
    if (n_folds < 2) throw DataError("crossfold_users: n_folds must be >= 2");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw DataError("crossfold_users: test_fraction must be in (0, 1)");
    if (min_ratings < 2) throw DataError("crossfold_users: min_ratings must be >= 2");

    // row indices per user, in parent row order
    std::vector<std::vector<size_t>> rows_by_user(data.n_users());
    for (size_t i = 0; i < data.rows().size(); ++i) rows_by_user[data.rows()[i].user].push_back(i);

    std::vector<int> eligible;
    for (size_t u = 0; u < rows_by_user.size(); ++u)
        if (rows_by_user[u].size() >= static_cast<size_t>(min_ratings))
            eligible.push_back(static_cast<int>(u));
    if (eligible.size() < static_cast<size_t>(n_folds))
        throw DataError("crossfold_users: fewer eligible users (" +
                        std::to_string(eligible.size()) + ") than folds");

    // shuffle by user id so the partition is independent of index assignment order
    std::sort(eligible.begin(), eligible.end(),
              [&](int a, int b) { return data.user_id(a) < data.user_id(b); });
    Rng rng = stream_rng(seed, "crossfold-users");
    rng.shuffle(eligible);

    SplitPlan plan;
    plan.seed = seed;
    plan.n_folds = n_folds;
    plan.test_fraction = test_fraction;

    const size_t n_eligible = eligible.size();
    size_t start = 0;
    for (int f = 0; f < n_folds; ++f) {
        size_t count = n_eligible / n_folds + (static_cast<size_t>(f) < n_eligible % n_folds ? 1 : 0);
        std::vector<int> fold_users(eligible.begin() + start, eligible.begin() + start + count);
        start += count;
        std::sort(fold_users.begin(), fold_users.end());

        std::vector<bool> is_test_row(data.rows().size(), false);
        for (int u : fold_users) {
            const auto& user_rows = rows_by_user[u];
            size_t n = user_rows.size();
            size_t n_test = static_cast<size_t>(std::ceil(test_fraction * static_cast<double>(n)));
            n_test = std::min(n_test, n - 1);
            std::vector<size_t> picks(user_rows);
            Rng urng = stream_rng_user(seed, "holdout", static_cast<uint64_t>(f), data.user_id(u));
            urng.shuffle(picks);
            for (size_t t = 0; t < n_test; ++t) is_test_row[picks[t]] = true;
        }

        std::vector<InteractionSet::Row> train_rows, test_rows;
        for (size_t i = 0; i < data.rows().size(); ++i)
            (is_test_row[i] ? test_rows : train_rows).push_back(data.rows()[i]);

        Fold fold;
        fold.fold_id = f;
        fold.train = InteractionSet::from_rows(data.vocab(), std::move(train_rows));
        fold.test = InteractionSet::from_rows(data.vocab(), std::move(test_rows));
        fold.test_users = std::move(fold_users);
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

ExternalSplit external_test_split(const InteractionSet& train_data, const InteractionSet& test_data) {
    // merge vocabularies: train ids first, then unseen test ids
    auto vocab = std::make_shared<Vocab>();
    for (const auto& id : train_data.vocab()->user_ids) vocab->add_user(id);
    for (const auto& id : train_data.vocab()->item_ids) vocab->add_item(id);
    for (const auto& id : test_data.vocab()->user_ids) vocab->add_user(id);
    for (const auto& id : test_data.vocab()->item_ids) vocab->add_item(id);
    vocab->finalize();

    auto remap = [&](const InteractionSet& src) {
        std::vector<InteractionSet::Row> rows;
        rows.reserve(src.size());
        for (const auto& r : src.rows()) {
            InteractionSet::Row out = r;
            out.user = vocab->user_index.at(src.user_id(r.user));
            out.item = vocab->item_index.at(src.item_id(r.item));
            rows.push_back(out);
        }
        return rows;
    };

    std::vector<bool> in_train(vocab->user_ids.size(), false);
    for (const auto& r : train_data.rows())
        in_train[vocab->user_index.at(train_data.user_id(r.user))] = true;

    size_t dropped = 0;
    std::vector<int> test_users;
    std::vector<bool> seen(vocab->user_ids.size(), false);
    for (const auto& r : test_data.rows()) {
        int u = vocab->user_index.at(test_data.user_id(r.user));
        if (seen[u]) continue;
        seen[u] = true;
        if (in_train[u])
            test_users.push_back(u);
        else
            ++dropped;
    }
    if (test_users.empty())
        throw DataError("external_test_split: no test user appears in the train data");
    std::sort(test_users.begin(), test_users.end());

    ExternalSplit out;
    out.dropped_users = dropped;
    out.fold.fold_id = 0;
    out.fold.train = InteractionSet::from_rows(vocab, remap(train_data));
    out.fold.test = InteractionSet::from_rows(vocab, remap(test_data));
    out.fold.test_users = std::move(test_users);
    return out;
}

void write_fold_csv(const Fold& fold, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "fold,user,item,value,part\n";
    auto dump = [&](const InteractionSet& set, const char* part) {
        for (const auto& r : set.rows()) {
            out << fold.fold_id << ',' << set.user_id(r.user) << ',' << set.item_id(r.item) << ',';
            if (r.has_value) out << format_double(r.value);
            out << ',' << part << '\n';
        }
    };
    dump(fold.train, "train");
    dump(fold.test, "test");
}

Fold read_fold_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty fold file: " + path.string());

    auto vocab = std::make_shared<Vocab>();
    struct Pending {
        int user, item;
        double value;
        bool has_value;
        bool test;
    };
    std::vector<Pending> pending;
    int fold_id = 0;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        size_t p1 = line.find(',');
        size_t p2 = line.find(',', p1 + 1);
        size_t p3 = line.find(',', p2 + 1);
        size_t p4 = line.find(',', p3 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos || p3 == std::string::npos ||
            p4 == std::string::npos)
            throw DataError("malformed fold row at line " + std::to_string(lineno));
        fold_id = std::stoi(line.substr(0, p1));
        std::string user = line.substr(p1 + 1, p2 - p1 - 1);
        std::string item = line.substr(p2 + 1, p3 - p2 - 1);
        std::string value = line.substr(p3 + 1, p4 - p3 - 1);
        std::string part = line.substr(p4 + 1);
        Pending row;
        row.user = vocab->add_user(user);
        row.item = vocab->add_item(item);
        row.has_value = !value.empty();
        row.value = row.has_value ? std::stod(value) : 0.0;
        row.test = (part == "test");
        pending.push_back(row);
    }
    vocab->finalize();

    std::vector<InteractionSet::Row> train_rows, test_rows;
    std::vector<bool> is_test_user(vocab->user_ids.size(), false);
    for (const auto& p : pending) {
        InteractionSet::Row r{p.user, p.item, p.value, 0, p.has_value, false};
        if (p.test) {
            test_rows.push_back(r);
            is_test_user[p.user] = true;
        } else {
            train_rows.push_back(r);
        }
    }
    Fold fold;
    fold.fold_id = fold_id;
    fold.train = InteractionSet::from_rows(vocab, std::move(train_rows));
    fold.test = InteractionSet::from_rows(vocab, std::move(test_rows));
    for (size_t u = 0; u < is_test_user.size(); ++u)
        if (is_test_user[u]) fold.test_users.push_back(static_cast<int>(u));
    return fold;
}

}  // namespace reclab
