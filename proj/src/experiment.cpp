#include "reclab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace reclab {

namespace fs = std::filesystem;

Fold holdout_all_users(const InteractionSet& data, double test_fraction, int min_ratings,
                       uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw DataError("holdout_all_users: test_fraction must be in (0, 1)");
    if (min_ratings < 2) throw DataError("holdout_all_users: min_ratings must be >= 2");

    std::vector<std::vector<size_t>> rows_by_user(data.n_users());
    for (size_t i = 0; i < data.rows().size(); ++i) rows_by_user[data.rows()[i].user].push_back(i);

    std::vector<int> test_users;
    std::vector<bool> is_test_row(data.rows().size(), false);
    for (size_t u = 0; u < rows_by_user.size(); ++u) {
        const auto& user_rows = rows_by_user[u];
        if (user_rows.size() < static_cast<size_t>(min_ratings)) continue;
        test_users.push_back(static_cast<int>(u));
        size_t n = user_rows.size();
        size_t n_test =
            static_cast<size_t>(std::ceil(test_fraction * static_cast<double>(n)));
        n_test = std::min(n_test, n - 1);
        std::vector<size_t> picks(user_rows);
        Rng rng = stream_rng_user(seed, "holdout", 0, data.user_id(static_cast<int>(u)));
        rng.shuffle(picks);
        for (size_t t = 0; t < n_test; ++t) is_test_row[picks[t]] = true;
    }
    if (test_users.empty()) throw DataError("holdout_all_users: no eligible users");

    std::vector<InteractionSet::Row> train_rows, test_rows;
    for (size_t i = 0; i < data.rows().size(); ++i)
        (is_test_row[i] ? test_rows : train_rows).push_back(data.rows()[i]);
    Fold fold;
    fold.fold_id = 0;
    fold.train = InteractionSet::from_rows(data.vocab(), std::move(train_rows));
    fold.test = InteractionSet::from_rows(data.vocab(), std::move(test_rows));
    fold.test_users = std::move(test_users);
    return fold;
}

void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    size_t n_workers = std::min<size_t>(threads, n);
    if (n_workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (size_t w = 0; w < n_workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

std::string file_content_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot hash missing file: " + path.string());
    uint64_t h = 14695981039346656037ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

// ---------- sweep ----------

namespace {

struct Cell {
    int fold;
    size_t algo;
    size_t strategy;
    std::string name;  // "f0_popular_uniform-100"
    std::string file;  // cells/<name>.csv
};

std::string config_header(const std::string& echo) {
    return echo.empty() ? std::string() : "# config: " + echo + "\n";
}

void write_text(const fs::path& path, const std::string& text) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write: " + path.string());
        out << text;
    }
    fs::rename(tmp, path);
}

}  // namespace

SweepOutcome run_sweep(const InteractionSet& data, const SweepSettings& settings,
                       const fs::path& out_dir) {
    if (settings.algorithms.empty()) throw DataError("run_sweep: no algorithms configured");
    if (settings.strategies.empty()) throw DataError("run_sweep: no strategies configured");

    fs::create_directories(out_dir / "cells");
    SplitPlan plan = crossfold_users(data, settings.n_folds, settings.test_fraction,
                                     settings.min_ratings, settings.seed);

    std::vector<FoldContext> contexts;
    contexts.reserve(plan.folds.size());
    std::vector<std::vector<double>> pop_ranks;
    for (const auto& fold : plan.folds) {
        contexts.emplace_back(fold);
        pop_ranks.push_back(item_popularity(fold.train).ranks);
    }

    std::vector<Cell> cells;
    for (int f = 0; f < settings.n_folds; ++f)
        for (size_t a = 0; a < settings.algorithms.size(); ++a)
            for (size_t s = 0; s < settings.strategies.size(); ++s) {
                Cell c;
                c.fold = f;
                c.algo = a;
                c.strategy = s;
                c.name = "f" + std::to_string(f) + "_" + settings.algorithms[a].label() + "_" +
                         settings.strategies[s].label();
                c.file = "cells/" + c.name + ".csv";
                cells.push_back(std::move(c));
            }

    // manifest from a previous run, for resumption
    std::map<std::string, std::string> prior_hashes;
    {
        std::ifstream in(out_dir / "manifest.csv");
        std::string line;
        while (in && std::getline(in, line)) {
            if (line.empty() || line[0] == '#' || line.rfind("cell,", 0) == 0) continue;
            size_t p1 = line.find(',');
            size_t p2 = line.find(',', p1 + 1);
            size_t p3 = line.find(',', p2 + 1);
            if (p1 == std::string::npos || p2 == std::string::npos || p3 == std::string::npos)
                continue;
            if (line.substr(p2 + 1, p3 - p2 - 1) == "done")
                prior_hashes[line.substr(0, p1)] = line.substr(p3 + 1);
        }
    }

    // lazily trained models, one per (fold, algorithm)
    std::vector<std::unique_ptr<TrainedModel>> models(plan.folds.size() *
                                                      settings.algorithms.size());
    std::vector<std::once_flag> model_once(models.size());
    auto model_for = [&](int fold, size_t algo) -> const TrainedModel& {
        size_t idx = static_cast<size_t>(fold) * settings.algorithms.size() + algo;
        std::call_once(model_once[idx], [&] {
            RecommenderSpec spec = settings.algorithms[algo];
            spec.seed = hash_combine(mix64(settings.seed), static_cast<uint64_t>(fold));
            models[idx] = train(spec, plan.folds[fold].train);
        });
        return *models[idx];
    };

    SweepOutcome outcome;
    outcome.n_cells = cells.size();
    std::vector<int> status(cells.size(), 0);  // 0 computed, 1 skipped, 2 failed
    std::vector<std::string> errors(cells.size());

    parallel_for(cells.size(), settings.threads, [&](size_t ci) {
        const Cell& cell = cells[ci];
        fs::path cell_path = out_dir / cell.file;
        auto prior = prior_hashes.find(cell.name);
        if (prior != prior_hashes.end() && fs::exists(cell_path) &&
            file_content_hash(cell_path) == prior->second) {
            status[ci] = 1;
            return;
        }
        try {
            const auto& fold = plan.folds[cell.fold];
            const auto& ctx = contexts[cell.fold];
            const auto& strategy = settings.strategies[cell.strategy];
            const auto& model = model_for(cell.fold, cell.algo);
            const std::string algo_label = settings.algorithms[cell.algo].label();
            const std::string strat_label = strategy.label();
            const std::string decoys_field =
                strategy.n_decoys ? std::to_string(*strategy.n_decoys) : "";

            std::ostringstream body;
            size_t dropped = 0;
            for (int user : fold.test_users) {
                CandidateSet cand;
                RankedList list;
                try {
                    cand = build_candidates(user, ctx, strategy, settings.seed);
                    list = model.recommend_top_n(user, cand, settings.list_depth);
                } catch (const ColdStartError&) {
                    ++dropped;
                    continue;
                }
                ItemSet relevant(cand.test_items.begin(), cand.test_items.end());
                for (const auto& m : settings.metrics) {
                    double v = m == "pop_rank"
                                   ? mean_popularity_rank(list, pop_ranks[cell.fold])
                                   : metric_at(m, list, relevant, settings.cutoff);
                    body << algo_label << ',' << strat_label << ',' << decoys_field << ',' << m
                         << ',' << fold.train.user_id(user) << ',' << format_double(v) << '\n';
                }
            }
            std::ostringstream text;
            text << "algo,strategy,n_decoys,metric,user,value\n";
            text << "# n_dropped=" << dropped << '\n';
            text << body.str();
            write_text(cell_path, text.str());
        } catch (const std::exception& e) {
            status[ci] = 2;
            errors[ci] = cell.name + ": " + e.what();
        }
    });

    for (size_t ci = 0; ci < cells.size(); ++ci) {
        if (status[ci] == 0) ++outcome.n_computed;
        if (status[ci] == 1) ++outcome.n_skipped;
        if (status[ci] == 2) {
            ++outcome.n_failed;
            outcome.failures.push_back(errors[ci]);
        }
    }

    // manifest, sorted by cell name
    {
        std::vector<size_t> order(cells.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](size_t a, size_t b) { return cells[a].name < cells[b].name; });
        std::ostringstream text;
        text << config_header(settings.config_echo);
        text << "cell,file,status,hash\n";
        for (size_t i : order) {
            const Cell& c = cells[i];
            if (status[i] == 2) {
                text << c.name << ',' << c.file << ",failed,\n";
            } else {
                text << c.name << ',' << c.file << ",done,"
                     << file_content_hash(out_dir / c.file) << '\n';
            }
        }
        write_text(out_dir / "manifest.csv", text.str());
    }

    // aggregate across folds from the cell files themselves, so skipped and
    // freshly computed cells contribute identically
    {
        struct Agg {
            double sum = 0.0;
            size_t n = 0;
        };
        std::map<std::tuple<std::string, std::string, std::string, std::string>, Agg> agg;
        for (size_t ci = 0; ci < cells.size(); ++ci) {
            if (status[ci] == 2) continue;
            std::ifstream in(out_dir / cells[ci].file);
            std::string line;
            bool first = true;
            while (std::getline(in, line)) {
                if (first || line.empty() || line[0] == '#') {
                    first = false;
                    continue;
                }
                std::array<std::string, 6> f;
                size_t start = 0;
                for (int k = 0; k < 6; ++k) {
                    size_t pos = k < 5 ? line.find(',', start) : line.size();
                    f[k] = line.substr(start, pos - start);
                    start = pos + 1;
                }
                auto& a = agg[{f[0], f[1], f[2], f[3]}];
                a.sum += std::stod(f[5]);
                ++a.n;
            }
        }
        std::ostringstream text;
        text << config_header(settings.config_echo);
        text << "algo,strategy,n_decoys,metric,mean,n_users\n";
        for (const auto& [key, a] : agg) {
            const auto& [algo, strat, nd, metric] = key;
            text << algo << ',' << strat << ',' << nd << ',' << metric << ','
                 << format_double(a.sum / static_cast<double>(a.n)) << ',' << a.n << '\n';
        }
        write_text(out_dir / "sweep_results.csv", text.str());
    }
    return outcome;
}

// ---------- bias simulation ----------

BiasTrialResult run_bias_trial(int trial, const BiasSettings& settings) {
    BiasTrialResult result;
    result.trial = trial;
    try {
        uint64_t trial_seed =
            hash_combine(hash_str(mix64(settings.seed), "bias-trial"), static_cast<uint64_t>(trial));

        LdaParams lda = settings.lda;
        lda.seed = trial_seed;
        TruePreferences truth = generate_preferences(lda);
        ObservedRatings observed = observe_popularity(truth, settings.observe_fraction,
                                                      settings.observe_gamma, trial_seed);

        // observation universe keeps every simulated user and item, so the full
        // candidate strategy spans the whole item space
        std::vector<Interaction> rows;
        auto vocab = std::make_shared<Vocab>();
        for (int u = 0; u < observed.n_users; ++u) vocab->add_user(std::to_string(u));
        for (int i = 0; i < observed.n_items; ++i) vocab->add_item(std::to_string(i));
        vocab->finalize();
        std::vector<InteractionSet::Row> obs_rows;
        for (int u = 0; u < observed.n_users; ++u)
            for (int i : observed.items[u])
                obs_rows.push_back({u, i, 0.0, 0, false, false});
        if (obs_rows.empty()) throw DataError("trial produced no observations");
        InteractionSet obs_set = InteractionSet::from_rows(vocab, std::move(obs_rows));

        Fold fold = holdout_all_users(obs_set, settings.test_fraction, settings.min_observed,
                                      trial_seed);
        FoldContext ctx(fold);

        std::vector<RecommenderSpec> algos;
        {
            RecommenderSpec s;
            s.hp = settings.hp;
            s.seed = trial_seed;
            s.kind = AlgoKind::implicit_mf;
            s.mode = FeedbackMode::implicit_fb;
            algos.push_back(s);
            s.kind = AlgoKind::item_knn;
            algos.push_back(s);
            s.kind = AlgoKind::popular;
            algos.push_back(s);
            s.kind = AlgoKind::oracle;
            algos.push_back(s);
            s.kind = AlgoKind::random_rec;
            algos.push_back(s);
        }

        const std::vector<CandidateStrategy> strategies = {
            {StrategyKind::full, {}},
            {StrategyKind::uniform, settings.decoy_size},
            {StrategyKind::popularity_weighted, settings.decoy_size},
        };

        struct Acc {
            double sum = 0.0;
            size_t n = 0;
        };
        // [algo][strategy][metric] observed; [algo][metric] truth
        std::vector<std::vector<std::vector<Acc>>> obs_acc(
            algos.size(), std::vector<std::vector<Acc>>(
                              strategies.size(), std::vector<Acc>(settings.metrics.size())));
        std::vector<std::vector<Acc>> truth_acc(algos.size(),
                                                std::vector<Acc>(settings.metrics.size()));

        std::vector<std::unique_ptr<TrainedModel>> models;
        for (const auto& spec : algos) models.push_back(train(spec, fold.train, &truth));

        size_t evaluated = 0, dropped = 0;
        for (int user : fold.test_users) {
            // truth-relevant: the user's true preferences reachable from the
            // candidate pool (everything but their train items)
            int truth_user = std::stoi(fold.train.user_id(user));
            const auto& train_items = ctx.train_items(user);
            ItemSet truth_relevant;
            for (int i : truth.liked[truth_user])
                if (!std::binary_search(train_items.begin(), train_items.end(), i))
                    truth_relevant.insert(i);
            ItemSet obs_relevant(ctx.test_items(user).begin(), ctx.test_items(user).end());
            if (obs_relevant.empty()) {
                ++dropped;
                continue;
            }

            bool user_ok = true;
            std::vector<std::vector<RankedList>> lists(algos.size());
            for (size_t a = 0; a < algos.size() && user_ok; ++a) {
                for (size_t s = 0; s < strategies.size(); ++s) {
                    try {
                        CandidateSet cand =
                            build_candidates(user, ctx, strategies[s], trial_seed);
                        lists[a].push_back(
                            models[a]->recommend_top_n(user, cand, settings.list_depth));
                    } catch (const ColdStartError&) {
                        user_ok = false;
                        break;
                    }
                }
            }
            if (!user_ok) {
                ++dropped;
                continue;
            }
            ++evaluated;
            for (size_t a = 0; a < algos.size(); ++a) {
                for (size_t s = 0; s < strategies.size(); ++s)
                    for (size_t m = 0; m < settings.metrics.size(); ++m) {
                        double v = metric_at(settings.metrics[m], lists[a][s], obs_relevant,
                                             settings.cutoff);
                        obs_acc[a][s][m].sum += v;
                        ++obs_acc[a][s][m].n;
                    }
                // truth metrics on the full-candidate list (strategy index 0)
                for (size_t m = 0; m < settings.metrics.size(); ++m) {
                    double v = metric_at(settings.metrics[m], lists[a][0], truth_relevant,
                                         settings.cutoff);
                    truth_acc[a][m].sum += v;
                    ++truth_acc[a][m].n;
                }
            }
        }
        if (evaluated == 0) throw DataError("no evaluable users in trial");
        result.n_users_evaluated = evaluated;
        result.n_users_dropped = dropped;

        for (size_t a = 0; a < algos.size(); ++a)
            for (size_t s = 0; s < strategies.size(); ++s)
                for (size_t m = 0; m < settings.metrics.size(); ++m) {
                    BiasTrialResult::Row row;
                    row.algo = algos[a].label();
                    row.strategy = strategies[s].label();
                    row.metric = settings.metrics[m];
                    row.m_obs = obs_acc[a][s][m].sum / static_cast<double>(obs_acc[a][s][m].n);
                    row.m_truth = truth_acc[a][m].sum / static_cast<double>(truth_acc[a][m].n);
                    row.bias = row.m_obs - row.m_truth;
                    result.rows.push_back(std::move(row));
                }
    } catch (const std::exception& e) {
        result.failed = true;
        result.error = e.what();
    }
    return result;
}

std::vector<BiasReportRow> aggregate_bias(const std::vector<BiasTrialResult>& trials) {
    if (trials.empty()) throw DataError("aggregate_bias: no trials");
    struct Acc {
        std::vector<double> biases;
    };
    std::map<std::tuple<std::string, std::string, std::string>, Acc> acc;
    for (const auto& t : trials) {
        if (t.failed) continue;
        for (const auto& r : t.rows) acc[{r.algo, r.strategy, r.metric}].biases.push_back(r.bias);
    }
    std::vector<BiasReportRow> report;
    for (const auto& [key, a] : acc) {
        BiasReportRow row;
        std::tie(row.algo, row.strategy, row.metric) = key;
        size_t n = a.biases.size();
        row.n_trials = n;
        double sum = 0.0;
        size_t neg = 0;
        for (double b : a.biases) {
            sum += b;
            if (b < 0.0) ++neg;
        }
        row.mean_bias = sum / static_cast<double>(n);
        row.frac_negative = static_cast<double>(neg) / static_cast<double>(n);
        if (n >= 2) {
            double ss = 0.0;
            for (double b : a.biases) ss += (b - row.mean_bias) * (b - row.mean_bias);
            row.std_error = std::sqrt(ss / static_cast<double>(n - 1)) /
                            std::sqrt(static_cast<double>(n));
            row.has_std_error = true;
        }
        report.push_back(std::move(row));
    }
    return report;
}

BiasOutcome run_bias_experiment(const BiasSettings& settings, const fs::path& out_dir) {
    if (settings.trials < 1) throw DataError("run_bias_experiment: trials must be >= 1");
    fs::create_directories(out_dir);

    BiasOutcome outcome;
    outcome.trials.resize(settings.trials);
    parallel_for(settings.trials, settings.threads,
                 [&](size_t t) { outcome.trials[t] = run_bias_trial(static_cast<int>(t), settings); });
    outcome.n_trials = outcome.trials.size();
    for (const auto& t : outcome.trials)
        if (t.failed) ++outcome.n_failed;
    if (outcome.n_failed == outcome.n_trials)
        throw DataError("all bias trials failed; first error: " + outcome.trials.front().error);

    {
        std::ostringstream text;
        text << config_header(settings.config_echo);
        text << "trial,algo,strategy,metric,m_obs,m_truth,bias\n";
        for (const auto& t : outcome.trials) {
            if (t.failed) {
                text << t.trial << ",,,,,,failed: " << t.error << '\n';
                continue;
            }
            for (const auto& r : t.rows)
                text << t.trial << ',' << r.algo << ',' << r.strategy << ',' << r.metric << ','
                     << format_double(r.m_obs) << ',' << format_double(r.m_truth) << ','
                     << format_double(r.bias) << '\n';
        }
        write_text(out_dir / "bias_trials.csv", text.str());
    }

    outcome.report = aggregate_bias(outcome.trials);
    {
        std::ostringstream text;
        text << config_header(settings.config_echo);
        text << "algo,strategy,metric,mean_bias,std_error,frac_negative,n_trials\n";
        for (const auto& r : outcome.report) {
            text << r.algo << ',' << r.strategy << ',' << r.metric << ','
                 << format_double(r.mean_bias) << ',';
            if (r.has_std_error) text << format_double(r.std_error);
            text << ',' << format_double(r.frac_negative) << ',' << r.n_trials << '\n';
        }
        write_text(out_dir / "bias_report.csv", text.str());
    }
    return outcome;
}

}  // namespace reclab
