#include <doctest.h>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "reclab/candidates.hpp"
#include "reclab/experiment.hpp"
#include "reclab/simulate.hpp"
#include "reclab/splitting.hpp"
#include "support.hpp"

using namespace reclab;
namespace ts = reclab::testsupport;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void verdict(int n, const std::string& what, bool ok) {
    std::cout << "[criterion " << n << "] " << (ok ? "PASS" : "FAIL") << " - " << what
              << std::endl;
    CHECK_MESSAGE(ok, "criterion ", n, ": ", what);
}

int run_cli(const std::string& args, const fs::path& capture, std::string* out = nullptr) {
    std::string cmd = std::string(RECLAB_CLI_PATH) + " " + args + " >" + capture.string() +
                      " 2>/dev/null";
    int status = std::system(cmd.c_str());
    if (out) *out = ts::slurp(capture);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::map<std::string, std::string> dir_bytes(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = ts::slurp(e.path());
    return out;
}

}  // namespace

TEST_CASE("criterion 1: dataset summary statistics") {
    ts::TempDir tmp("acc1");
    fs::path data_file;
    std::string fmt;
    if (auto real = ts::ml100k_path()) {
        data_file = *real;
        fmt = "ml100k";
    } else {
        data_file = tmp.path() / "u.data";
        std::ofstream f(data_file);
        auto set = ts::synthetic_ml100k();
        for (const auto& r : set.rows())
            f << set.user_id(r.user) << '\t' << set.item_id(r.item) << '\t' << r.value << '\t'
              << r.timestamp << '\n';
        fmt = "ml100k";
    }

    auto t0 = std::chrono::steady_clock::now();
    std::string out;
    int code = run_cli("inspect --data " + data_file.string() + " --format " + fmt + " --json",
                       tmp.path() / "inspect.json", &out);
    double elapsed = seconds_since(t0);

    bool ok = code == 0;
    if (ok) {
        auto j = json::parse(out);
        double gini = j["gini"].get<double>();
        double density = j["density"].get<double>();
        ok = j["n_items"] == 1682 && std::abs(gini - 0.6290) <= 0.002 &&
             std::abs(density - 0.063) <= 0.001 && elapsed < 5.0;
    }

    // low-concentration surrogate in lieu of the Yahoo!R3 test ratings
    auto low = ts::counts_with_gini(0.0798, 1000, 50000, 1000000);
    std::vector<double> lowd(low.begin(), low.end());
    ok = ok && gini_index(lowd) < 0.1;

    verdict(1, "dataset summary: gini/density/item count within tolerance", ok);
}

TEST_CASE("criterion 2: exhaustive metric oracle equivalence") {
    auto t0 = std::chrono::steady_clock::now();
    long long cases = 0, violations = 0;
    for (int n = 1; n <= 6; ++n) {
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        do {
            for (int mask = 0; mask < (1 << n); ++mask) {
                ItemSet rel;
                for (int i = 0; i < n; ++i)
                    if (mask & (1 << i)) rel.insert(i);
                RankedList list;
                list.user = 0;
                list.items = perm;
                list.scores.assign(n, 0.0);
                for (int k = 1; k <= n; ++k) {
                    ++cases;
                    int hits = 0;
                    double dcg = 0.0, rr = 0.0;
                    for (int r = 0; r < k; ++r)
                        if (rel.count(perm[r])) {
                            ++hits;
                            dcg += 1.0 / std::log2(r + 2.0);
                            if (rr == 0.0) rr = 1.0 / (r + 1.0);
                        }
                    double idcg = 0.0;
                    for (size_t r = 0; r < std::min<size_t>(k, rel.size()); ++r)
                        idcg += 1.0 / std::log2(r + 2.0);
                    double want_ndcg = rel.empty() ? 0.0 : dcg / idcg;
                    double want_prec = static_cast<double>(hits) / k;
                    double want_rec =
                        rel.empty() ? 0.0 : static_cast<double>(hits) / rel.size();
                    double want_hit = hits > 0 ? 1.0 : 0.0;
                    auto close = [](double a, double b) { return std::abs(a - b) < 1e-12; };
                    if (!close(ndcg_at(list, rel, k), want_ndcg)) ++violations;
                    if (!close(precision_at(list, rel, k), want_prec)) ++violations;
                    if (!close(recall_at(list, rel, k), want_rec)) ++violations;
                    if (!close(hit_at(list, rel, k), want_hit)) ++violations;
                    if (!close(reciprocal_rank(list, rel, k), rr)) ++violations;
                }
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    double elapsed = seconds_since(t0);
    verdict(2, "metric oracle equivalence over " + std::to_string(cases) + " exhaustive cases",
            violations == 0 && elapsed < 60.0);
}

TEST_CASE("criterion 3: sampler correctness") {
    // weighted marginal: single draws from weights {10, 5, 2, 1}
    std::vector<int> pool = {0, 1, 2, 3};
    std::vector<double> weights = {10, 5, 2, 1};
    const int trials = 100000;
    std::vector<int> counts(4, 0);
    Rng rng(2024);
    for (int t = 0; t < trials; ++t)
        ++counts[sample_weighted_without_replacement(pool, weights, 1, rng)[0]];
    double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    bool weighted_ok = true;
    for (int i = 0; i < 4; ++i) {
        double p = weights[i] / wsum;
        double sd = std::sqrt(trials * p * (1 - p));
        if (std::abs(counts[i] - trials * p) > 4 * sd) weighted_ok = false;
    }

    // uniform sampler: distribution of a single decoy over a 10-item pool
    std::vector<Interaction> rows;
    for (int i = 0; i < 13; ++i) rows.push_back({"filler", "i" + std::to_string(i), {}, {}});
    for (int i = 0; i < 3; ++i) rows.push_back({"u0", "i" + std::to_string(i), {}, {}});
    auto data = InteractionSet::from_interactions(rows);
    std::vector<InteractionSet::Row> train_rows, test_rows;
    for (const auto& r : data.rows())
        if (data.user_id(r.user) == "u0" && data.item_id(r.item) == "i2")
            test_rows.push_back(r);
        else
            train_rows.push_back(r);
    Fold fold;
    fold.train = InteractionSet::from_rows(data.vocab(), train_rows);
    fold.test = InteractionSet::from_rows(data.vocab(), test_rows);
    fold.test_users = {data.user_index("u0").value()};
    FoldContext ctx(fold);
    std::vector<int> bins(data.n_items(), 0);
    for (int seed = 0; seed < trials; ++seed) {
        auto cand = build_uniform(fold.test_users[0], ctx, 1, static_cast<uint64_t>(seed));
        ++bins[cand.decoys[0]];
    }
    double expect = trials / 10.0;
    double chi2 = 0.0;
    int n_bins = 0;
    for (size_t i = 0; i < bins.size(); ++i)
        if (bins[i] > 0) {
            chi2 += (bins[i] - expect) * (bins[i] - expect) / expect;
            ++n_bins;
        }
    // 9 degrees of freedom, p = 0.001 critical value
    bool uniform_ok = n_bins == 10 && chi2 < 27.88;

    verdict(3, "weighted marginal within 4 sd; uniform chi-square p > 0.001",
            weighted_ok && uniform_ok);
}

TEST_CASE("criterion 4: decoy-size trends on a concentrated dataset") {
    auto t0 = std::chrono::steady_clock::now();
    auto data = ts::ml100k_or_surrogate();

    SweepSettings s;
    s.n_folds = 2;
    s.test_fraction = 0.2;
    s.min_ratings = 5;
    s.metrics = {"ndcg"};
    s.cutoff = 10;
    s.list_depth = 10;
    s.seed = 20240;
    s.threads = 0;
    s.algorithms = {
        {AlgoKind::popular, FeedbackMode::implicit_fb, {}, 0},
        {AlgoKind::random_rec, FeedbackMode::implicit_fb, {}, 0},
        {AlgoKind::user_knn, FeedbackMode::explicit_fb, {}, 0},
    };
    s.strategies = sweep_sizes({StrategyKind::uniform, StrategyKind::popularity_weighted},
                               {20, 100, 500});

    ts::TempDir tmp("acc4");
    auto outcome = run_sweep(data, s, tmp.path());
    REQUIRE(outcome.n_failed == 0);

    std::map<std::pair<std::string, std::string>, double> mean;  // (algo, strategy) -> ndcg
    std::ifstream in(tmp.path() / "sweep_results.csv");
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("algo,", 0) == 0) continue;
        std::vector<std::string> f;
        size_t start = 0;
        for (int k = 0; k < 6; ++k) {
            size_t pos = k < 5 ? line.find(',', start) : line.size();
            f.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        if (f[3] == "ndcg") mean[{f[0], f[1]}] = std::stod(f[4]);
    }

    auto decline = [&](const std::string& algo, const std::string& kind) {
        double v20 = mean.at({algo, kind + "-20"});
        double v500 = mean.at({algo, kind + "-500"});
        return (v20 - v500) / v20;  // relative decline from size 20 to 500
    };

    double u_pop = decline("popular", "uniform");
    double u_rnd = decline("random", "uniform");
    double u_uknn = decline("user-knn", "uniform");
    double p_pop = decline("popular", "pop-weighted");
    double p_uknn = decline("user-knn", "pop-weighted");
    double elapsed = seconds_since(t0);

    bool a = u_pop < u_rnd && u_pop < u_uknn;
    bool b = p_pop <= 2.0 * p_uknn;
    std::cout << "  uniform declines: popular=" << u_pop << " random=" << u_rnd
              << " user-knn=" << u_uknn << "\n  pop-weighted declines: popular=" << p_pop
              << " user-knn=" << p_uknn << " (" << elapsed << " s)\n";
    verdict(4, "popular robust under uniform decoys, all-alike under pop-weighted",
            a && b && elapsed < 900.0);
}

TEST_CASE("criterion 5: simulation bias direction at desk scale") {
    auto t0 = std::chrono::steady_clock::now();
    BiasSettings b;
    b.lda.n_users = 2000;
    b.lda.n_items = 1500;
    b.lda.lambda = 60.0;
    b.decoy_size = 1000;
    b.list_depth = 50;
    b.cutoff = 50;
    b.metrics = {"ndcg"};
    b.trials = 20;
    b.seed = 321;
    b.threads = 0;
    ts::TempDir tmp("acc5");
    auto outcome = run_bias_experiment(b, tmp.path());
    REQUIRE(outcome.n_failed == 0);

    std::map<std::pair<std::string, std::string>, double> bias;  // (algo, strategy)
    for (const auto& r : outcome.report)
        if (r.metric == "ndcg") bias[{r.algo, r.strategy}] = r.mean_bias;

    const std::vector<std::string> algos = {"implicit-mf", "item-knn-implicit", "popular",
                                            "oracle", "random"};
    std::string uniform_label = "uniform-" + std::to_string(b.decoy_size);
    bool all_negative = true;
    for (const auto& a : algos)
        if (!(bias.at({a, "full"}) < 0.0)) all_negative = false;
    bool uniform_improves = true;
    for (const auto& a : {"implicit-mf", "item-knn-implicit", "oracle"})
        if (!(std::abs(bias.at({a, uniform_label})) < std::abs(bias.at({a, "full"}))))
            uniform_improves = false;
    double elapsed = seconds_since(t0);

    for (const auto& a : algos)
        std::cout << "  " << a << ": full=" << bias.at({a, "full"})
                  << " uniform=" << bias.at({a, uniform_label}) << "\n";
    std::cout << "  (" << elapsed << " s)\n";
    verdict(5, "full-candidate bias negative everywhere; uniform sampling shrinks it",
            all_negative && uniform_improves && elapsed < 1800.0);
}

TEST_CASE("criterion 6: byte-identical outputs across runs and thread counts") {
    ts::TempDir tmp("acc6");

    fs::path data_file = tmp.path() / "ratings.csv";
    {
        std::ofstream f(data_file);
        for (int u = 0; u < 15; ++u)
            for (int i = 0; i < 20; ++i)
                if ((u * 5 + i * 3) % 4 != 0)
                    f << "u" << u << ",i" << i << "," << ((u + i) % 5 + 1) << "\n";
    }
    json sweep_cfg = {
        {"dataset", {{"path", data_file.string()}, {"format", "csv"}}},
        {"split", {{"n_folds", 2}, {"min_ratings", 4}}},
        {"algorithms", json::array({{{"kind", "popular"}, {"mode", "implicit"}},
                                    {{"kind", "item-knn"}, {"mode", "explicit"}}})},
        {"strategies", {{"kinds", json::array({"uniform", "pop-weighted"})},
                        {"sizes", json::array({5, 10})}}},
        {"seed", 99},
    };
    fs::path sweep_path = tmp.path() / "sweep.json";
    std::ofstream(sweep_path) << sweep_cfg.dump();
    json sim_cfg = {
        {"simulation",
         {{"n_users", 60}, {"n_items", 120}, {"n_features", 3}, {"lambda", 15.0}, {"trials", 3},
          {"decoy_size", 25}, {"list_depth", 5}, {"cutoff", 5},
          {"hyperparams", {{"factors", 4}, {"iterations", 3}}}}},
        {"seed", 99},
    };
    fs::path sim_path = tmp.path() / "sim.json";
    std::ofstream(sim_path) << sim_cfg.dump();

    bool ok = true;
    std::vector<std::map<std::string, std::string>> sweeps, sims;
    int run = 0;
    for (int threads : {1, 4, 1, 4}) {
        fs::path swd = tmp.path() / ("sw" + std::to_string(run));
        fs::path sid = tmp.path() / ("si" + std::to_string(run));
        ok = ok && run_cli("sweep " + sweep_path.string() + " --threads " +
                               std::to_string(threads) + " --out " + swd.string(),
                           tmp.path() / "log") == 0;
        ok = ok && run_cli("simulate " + sim_path.string() + " --threads " +
                               std::to_string(threads) + " --out " + sid.string(),
                           tmp.path() / "log") == 0;
        sweeps.push_back(dir_bytes(swd));
        sims.push_back(dir_bytes(sid));
        ++run;
    }
    for (size_t i = 1; i < sweeps.size(); ++i) {
        ok = ok && sweeps[i] == sweeps[0];
        ok = ok && sims[i] == sims[0];
    }
    verdict(6, "sweep and simulate outputs identical over reruns and threads {1,4}", ok);
}

TEST_CASE("criterion 7: property suites over 1000+ randomized instances") {
    long long violations = 0;
    Rng meta(777);

    // candidate-set disjointness / containment
    for (int rep = 0; rep < 1000; ++rep) {
        auto data = ts::random_implicit(meta, 6 + static_cast<int>(meta.uniform_below(6)),
                                        12 + static_cast<int>(meta.uniform_below(12)), 0.3);
        auto plan = crossfold_users(data, 2, 0.25, 3, meta.next_u64());
        const auto& fold = plan.folds[meta.uniform_below(2)];
        if (fold.test_users.empty()) continue;
        FoldContext ctx(fold);
        int user = fold.test_users[meta.uniform_below(fold.test_users.size())];
        uint64_t seed = meta.next_u64();
        auto full = build_full(user, ctx);
        int n = static_cast<int>(meta.uniform_below(8));
        auto cand = meta.uniform() < 0.5 ? build_uniform(user, ctx, n, seed)
                                         : build_popularity_weighted(user, ctx, n, seed);
        std::set<int> test(cand.test_items.begin(), cand.test_items.end());
        std::set<int> decoys(cand.decoys.begin(), cand.decoys.end());
        if (decoys.size() != cand.decoys.size()) ++violations;
        for (int i : decoys)
            if (test.count(i) ||
                !std::binary_search(full.decoys.begin(), full.decoys.end(), i))
                ++violations;
        for (int i : ctx.train_items(user))
            if (test.count(i) || decoys.count(i)) ++violations;
    }

    // split invariants: per-user partition, fold disjointness, holdout rule
    for (int rep = 0; rep < 1000; ++rep) {
        auto data = ts::random_implicit(meta, 8 + static_cast<int>(meta.uniform_below(8)), 15,
                                        0.3);
        int n_folds = 2 + static_cast<int>(meta.uniform_below(3));
        double frac = 0.1 + 0.3 * meta.uniform();
        auto plan = crossfold_users(data, n_folds, frac, 3, meta.next_u64());
        std::set<int> seen;
        size_t total_rows = 0;
        for (const auto& fold : plan.folds) {
            total_rows += fold.test.rows().size() + fold.train.rows().size();
            if (fold.test.rows().size() + fold.train.rows().size() != data.rows().size())
                ++violations;
            for (int u : fold.test_users)
                if (!seen.insert(u).second) ++violations;  // folds share a test user
            std::map<int, std::pair<int, int>> per_user;  // user -> (train, test)
            for (const auto& r : fold.train.rows()) ++per_user[r.user].first;
            for (const auto& r : fold.test.rows()) ++per_user[r.user].second;
            for (int u : fold.test_users) {
                auto [ntr, nte] = per_user[u];
                int expect = std::min<int>(
                    static_cast<int>(std::ceil(frac * (ntr + nte))), ntr + nte - 1);
                if (nte != expect) ++violations;
            }
        }
        (void)total_rows;
    }

    // Dirichlet normalization
    for (int rep = 0; rep < 1000; ++rep) {
        size_t k = 2 + meta.uniform_below(20);
        double alpha = 0.01 + 2.0 * meta.uniform();
        Rng r(meta.next_u64());
        auto v = r.dirichlet_symmetric(alpha, k);
        double sum = std::accumulate(v.begin(), v.end(), 0.0);
        if (std::abs(sum - 1.0) > 1e-9) ++violations;
        for (double x : v)
            if (!(x >= 0.0)) ++violations;
    }

    // observation subset property
    for (int rep = 0; rep < 1000; ++rep) {
        TruePreferences truth;
        truth.n_users = 5;
        truth.n_items = 30;
        truth.liked.resize(5);
        for (auto& liked : truth.liked) {
            std::set<int> s;
            size_t n = meta.uniform_below(12);
            while (s.size() < n) s.insert(static_cast<int>(meta.uniform_below(30)));
            liked.assign(s.begin(), s.end());
        }
        double frac = meta.uniform();
        double gamma = 2.0 * meta.uniform();
        auto obs = observe_popularity(truth, frac, gamma, meta.next_u64());
        for (int u = 0; u < 5; ++u) {
            size_t expect = static_cast<size_t>(
                std::llround(frac * static_cast<double>(truth.liked[u].size())));
            if (obs.items[u].size() != std::min(expect, truth.liked[u].size())) ++violations;
            for (int i : obs.items[u])
                if (!std::binary_search(truth.liked[u].begin(), truth.liked[u].end(), i))
                    ++violations;
        }
    }

    // ALS objective monotonicity
    for (int rep = 0; rep < 1000; ++rep) {
        auto data = ts::random_implicit(meta, 6, 5, 0.4);
        RecommenderSpec spec{AlgoKind::implicit_mf, FeedbackMode::implicit_fb, {}, meta.next_u64()};
        spec.hp.mf_factors = 2;
        spec.hp.mf_iterations = 4;
        auto trace = als_objective_trace(spec, data);
        for (size_t i = 1; i < trace.size(); ++i)
            if (trace[i] > trace[i - 1] + 1e-8) ++violations;
    }

    verdict(7, "invariant suites (5 x 1000 randomized instances), zero violations",
            violations == 0);
}
