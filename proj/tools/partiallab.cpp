#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "partiallab/config.hpp"
#include "partiallab/gradcheck.hpp"
#include "partiallab/trainer.hpp"

namespace {

using namespace partiallab;

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << content;
    if (!os) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::size_t worker_count(std::size_t jobs) {
    std::size_t n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("PARTIALLAB_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v < 1) throw std::invalid_argument("PARTIALLAB_THREADS must be a positive integer");
        n = static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::min(n, jobs));
}

struct GenerateArgs {
    std::size_t n = 1000, c = 8, d = 16;
    double corr = 0.5, p = 0.1;
    std::uint64_t seed = 0;
    bool ensure_positive = false;
    std::string protocol = "partial";
    std::string out = "dataset.txt";
};

int cmd_generate(const GenerateArgs& a) {
    Dataset full = gen_synthetic(a.n, a.c, a.d, a.corr, a.seed, a.ensure_positive);
    Dataset ds = apply_protocol(full, a.protocol, a.p, a.seed);
    ojson flags{{"cmd", "generate"}, {"n", a.n},       {"c", a.c},
                {"d", a.d},          {"corr", a.corr}, {"protocol", a.protocol},
                {"p", a.p},          {"seed", a.seed}, {"ensure_positive", a.ensure_positive}};
    std::string hash = "fnv1a:" + hex64(fnv1a(flags.dump()));
    std::ostringstream os;
    write_dataset(os, ds,
                  {std::string(kToolName) + " " + kToolVersion, "config " + hash});
    write_text_file(a.out, os.str());
    BudgetReport b = budget(ds);
    std::cout << "wrote " << a.out << " (" << ds.n() << "x" << ds.classes() << ", clean "
              << b.clean_count << ", noisy " << b.noisy_count << ")\n";
    return 0;
}

struct TrainArgs {
    std::string config;
    std::string out = "report.json";
    std::string audit;
    bool dry_run = false;
};

int cmd_train(const TrainArgs& a) {
    ExperimentConfig cfg =
        a.config.empty() ? ExperimentConfig{} : load_experiment_config(a.config);
    if (a.dry_run) {
        std::cout << to_canonical_json(cfg).dump(2) << "\n";
        return 0;
    }
    std::string hash = config_hash(cfg);
    auto [tr, ev] = build_experiment_data(cfg);
    RunReport rep = train(cfg.train, std::move(tr), ev);
    write_text_file(a.out, report_to_json(rep, hash).dump(2) + "\n");
    if (!a.audit.empty()) {
        std::ostringstream os;
        os << "# " << kToolName << " " << kToolVersion << "\n# config " << hash << "\n";
        write_audit_csv(os, rep.audit);
        write_text_file(a.audit, os.str());
    }
    const MetricsReport& m = rep.final_metrics;
    std::cout << "map=" << format_double(m.map) << " macro_f1=" << format_double(m.macro_f1)
              << " micro_f1=" << format_double(m.micro_f1) << "\n"
              << "wrote " << a.out << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string data;
    std::string scores;
    std::string out = "metrics.json";
};

Matrix read_scores(std::istream& is, std::size_t N, std::size_t C) {
    Matrix s(N, C);
    std::string line, tok;
    std::size_t i = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (i >= N) throw std::runtime_error("scores file has more rows than the dataset");
        std::istringstream ls(line);
        for (std::size_t j = 0; j < C; ++j) {
            if (!(ls >> tok)) throw std::runtime_error("scores row " + std::to_string(i) + " is short");
            s(i, j) = parse_double(tok);
        }
        if (ls >> tok) throw std::runtime_error("scores row " + std::to_string(i) + " has trailing tokens");
        ++i;
    }
    if (i != N) throw std::runtime_error("scores file has fewer rows than the dataset");
    return s;
}

int cmd_evaluate(const EvaluateArgs& a) {
    std::string data_text = read_text_file(a.data);
    std::string scores_text = read_text_file(a.scores);
    std::istringstream ds_in(data_text);
    Dataset ds = read_dataset(ds_in);
    std::istringstream sc_in(scores_text);
    Matrix scores = read_scores(sc_in, ds.n(), ds.classes());
    MetricsReport m = compute_metrics(scores, ds.y_full, &std::cerr);
    std::string hash = "fnv1a:" + hex64(fnv1a(data_text + "|" + scores_text));
    ojson j;
    j["meta"] = meta_json(hash);
    j["metrics"] = metrics_to_json(m);
    write_text_file(a.out, j.dump(2) + "\n");
    std::cout << "map=" << format_double(m.map) << " micro_f1=" << format_double(m.micro_f1)
              << "\nwrote " << a.out << "\n";
    return 0;
}

struct CompareArgs {
    std::string config;
    std::vector<std::string> protocols = {"partial", "dense"};
    std::vector<double> proportions = {0.1, 0.2, 0.5, 1.0};
    std::size_t seeds = 3;
    std::string out = "compare.csv";
};

struct CompareRow {
    std::string protocol;
    double proportion = 0.0;
    std::size_t seed = 0;
    MetricsReport m;
    BudgetReport b;
};

int cmd_compare(const CompareArgs& a) {
    if (a.seeds < 1) throw std::invalid_argument("--seeds must be >= 1");
    if (a.protocols.empty() || a.proportions.empty())
        throw std::invalid_argument("--protocols and --proportions must be non-empty");
    ExperimentConfig base =
        a.config.empty() ? ExperimentConfig{} : load_experiment_config(a.config);
    for (const std::string& p : a.protocols) {
        if (p != "full" && p != "partial" && p != "dense" && p != "noisy" && p != "noisy_plus")
            throw std::invalid_argument("unknown protocol: " + p);
    }
    struct Job {
        std::string protocol;
        double prop;
        std::size_t seed;
    };
    std::vector<Job> jobs;
    for (const std::string& pr : a.protocols)
        for (double p : a.proportions)
            for (std::size_t s = 0; s < a.seeds; ++s) jobs.push_back({pr, p, s});

    std::vector<CompareRow> rows(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    auto run_one = [&](const Job& job, CompareRow& row) {
        ExperimentConfig c = base;
        c.protocol = job.protocol;
        c.mask_p = job.prop;
        c.data_seed = base.data_seed + job.seed;
        c.mask_seed = mix_seed(mix_seed(base.mask_seed + job.seed, fnv1a(job.protocol)),
                               std::bit_cast<std::uint64_t>(job.prop));
        c.train.seed = base.train.seed + job.seed;
        auto [tr, ev] = build_experiment_data(c);
        RunReport rep = train(c.train, std::move(tr), ev);
        row.protocol = job.protocol;
        row.proportion = job.prop;
        row.seed = job.seed;
        row.m = rep.final_metrics;
        row.b = rep.budget;
    };
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                run_one(jobs[i], rows[i]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::size_t nw = worker_count(jobs.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i + 1 < nw; ++i) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    std::sort(rows.begin(), rows.end(), [](const CompareRow& x, const CompareRow& y) {
        if (x.protocol != y.protocol) return x.protocol < y.protocol;
        if (x.proportion != y.proportion) return x.proportion < y.proportion;
        return x.seed < y.seed;
    });
    ojson sweep{{"protocols", a.protocols}, {"proportions", a.proportions}, {"seeds", a.seeds}};
    std::string hash =
        "fnv1a:" + hex64(fnv1a(to_canonical_json(base).dump() + "|" + sweep.dump()));
    std::ostringstream os;
    os << "# " << kToolName << " " << kToolVersion << "\n# config " << hash << "\n";
    os << "protocol,proportion,seed,map,exact_match,macro_f1,micro_f1,pc_p,pc_r,ov_p,ov_r,"
          "clean_count,noisy_count\n";
    for (const CompareRow& r : rows) {
        os << r.protocol << "," << format_double(r.proportion) << "," << r.seed << ","
           << format_double(r.m.map) << "," << format_double(r.m.exact_match) << ","
           << format_double(r.m.macro_f1) << "," << format_double(r.m.micro_f1) << ","
           << format_double(r.m.pc_p) << "," << format_double(r.m.pc_r) << ","
           << format_double(r.m.ov_p) << "," << format_double(r.m.ov_r) << "," << r.b.clean_count
           << "," << r.b.noisy_count << "\n";
    }
    write_text_file(a.out, os.str());
    std::cout << "wrote " << a.out << " (" << rows.size() << " rows)\n";
    return 0;
}

struct GradcheckArgs {
    std::uint64_t seed = 0;
    std::size_t per_block = 2;
    double tol = 1e-5;
    std::string inject;
};

int cmd_gradcheck(const GradcheckArgs& a) {
    std::vector<BlockCheck> blocks = run_gradient_checks(a.seed, a.per_block, a.tol, a.inject);
    bool ok = true;
    std::size_t instances = 0;
    std::printf("%-22s %9s %13s  %s\n", "block", "instances", "max_rel_err", "status");
    for (const BlockCheck& b : blocks) {
        std::printf("%-22s %9zu %13.3e  %s\n", b.block.c_str(), b.instances, b.max_rel_err,
                    b.pass ? "ok" : "FAIL");
        ok = ok && b.pass;
        instances += b.instances;
    }
    std::printf("gradcheck: %s (%zu blocks, %zu instances, tol %.1e)\n", ok ? "PASS" : "FAIL",
                blocks.size(), instances, a.tol);
    return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"partial-label multi-label training experiments"};
    app.require_subcommand(1);

    GenerateArgs ga;
    CLI::App* gen = app.add_subcommand("generate", "generate a synthetic dataset file");
    gen->add_option("--n", ga.n, "number of examples");
    gen->add_option("--c", ga.c, "number of classes");
    gen->add_option("--d", ga.d, "feature dimension");
    gen->add_option("--corr", ga.corr, "label correlation strength in [0,1]");
    gen->add_option("--protocol", ga.protocol, "full|partial|dense|noisy|noisy_plus");
    gen->add_option("--p", ga.p, "protocol parameter (kept proportion / fraction / clean fraction)");
    gen->add_option("--seed", ga.seed, "generation and masking seed");
    gen->add_flag("--ensure-positive", ga.ensure_positive, "redraw rows with no positive label");
    gen->add_option("--out", ga.out, "output dataset path");

    TrainArgs ta;
    CLI::App* tr = app.add_subcommand("train", "train one experiment from a JSON config");
    tr->add_option("--config", ta.config, "experiment config JSON (defaults when omitted)");
    tr->add_option("--out", ta.out, "run report JSON path");
    tr->add_option("--audit", ta.audit, "relabeling audit CSV path");
    tr->add_flag("--dry-run", ta.dry_run, "print the resolved config and exit");

    EvaluateArgs ea;
    CLI::App* ev = app.add_subcommand("evaluate", "score a dataset against a scores file");
    ev->add_option("--data", ea.data, "dataset file")->required();
    ev->add_option("--scores", ea.scores, "whitespace-separated score rows")->required();
    ev->add_option("--out", ea.out, "metrics JSON path");

    CompareArgs ca;
    CLI::App* cm = app.add_subcommand("compare", "sweep protocols x proportions x seeds");
    cm->add_option("--config", ca.config, "base experiment config JSON");
    cm->add_option("--protocols", ca.protocols, "comma-separated protocol list")
        ->delimiter(',');
    cm->add_option("--proportions", ca.proportions, "comma-separated proportion list")
        ->delimiter(',');
    cm->add_option("--seeds", ca.seeds, "number of replicate seeds");
    cm->add_option("--out", ca.out, "output CSV path");

    GradcheckArgs gca;
    CLI::App* gc = app.add_subcommand("gradcheck", "run the finite-difference gradient suite");
    gc->add_option("--seed", gca.seed, "suite seed");
    gc->add_option("--per-block", gca.per_block, "instances per parameter block");
    gc->add_option("--tol", gca.tol, "relative error tolerance");
    gc->add_option("--inject", gca.inject, "negate the analytic gradient of one block")
        ->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cmd_generate(ga);
        if (tr->parsed()) return cmd_train(ta);
        if (ev->parsed()) return cmd_evaluate(ea);
        if (cm->parsed()) return cmd_compare(ca);
        if (gc->parsed()) return cmd_gradcheck(gca);
        std::cerr << "no subcommand\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::logic_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
