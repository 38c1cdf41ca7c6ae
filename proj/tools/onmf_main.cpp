// Experiment runner: online/batch NMF runs, data pipelines and a self-check.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "onmf/onmf.hpp"

namespace fs = std::filesystem;
using namespace onmf;

namespace {

constexpr const char* kVersion = "onmf 0.1.0";

// FNV-1a digest of a file, recorded in the manifest for provenance.
std::string file_digest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open: " + path);
    std::uint64_t h = 14695981039346656037ull;
    char buf[1 << 14];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        for (std::streamsize i = 0; i < is.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    char out[32];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

fs::path resolve_out_dir(const std::string& out_flag) {
    fs::path p(out_flag);
    if (p.is_relative()) {
        if (const char* root = std::getenv("ONMF_OUT_DIR")) p = fs::path(root) / p;
    }
    fs::create_directories(p);
    return p;
}

void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& extras) {
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& tok = extras[i];
        if (tok.rfind("--", 0) != 0)
            throw ConfigError("unexpected argument '" + tok + "' (overrides are --key value)");
        std::string key = tok.substr(2);
        std::string value;
        if (auto eq = key.find('='); eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else {
            if (i + 1 >= extras.size())
                throw ConfigError("override '--" + key + "' is missing a value");
            value = extras[++i];
        }
        set_config_key(cfg, key, value);
    }
}

struct DataSource {
    std::unique_ptr<SampleStream> stream;
    std::size_t dim = 0;
    std::size_t source_samples = 0;
    std::string digest;  // empty for synthetic data
};

DataSource open_source(const ExperimentConfig& cfg, const DivergenceSpec& div,
                       const ResolvedRun* run_hint) {
    DataSource src;
    const std::uint64_t replication = run_hint ? run_hint->replication : 1;
    if (cfg.data == "synth") {
        SyntheticSpec spec;
        spec.F = cfg.f;
        spec.K_truth = cfg.k_truth;
        spec.N = cfg.n_samples;
        spec.kappa = cfg.kappa;
        spec.sigma = cfg.sigma;
        spec.noise = resolve_noise(cfg, div);
        spec.clip_hi = cfg.clip_hi;
        src.dim = cfg.f;
        src.source_samples = cfg.n_samples;
        src.stream = std::make_unique<SyntheticStream>(spec, replication, cfg.seed,
                                                       cfg.shuffle, cfg.floor);
    } else {
        Matrix m = read_matrix_file(cfg.data);
        src.dim = m.rows();
        src.source_samples = m.cols();
        src.digest = file_digest(cfg.data);
        src.stream = std::make_unique<MatrixStream>(std::move(m), replication, cfg.clip_hi,
                                                    cfg.seed, cfg.shuffle, cfg.floor);
    }
    return src;
}

void write_manifest(const fs::path& dir, const ExperimentConfig& cfg,
                    const ResolvedRun& run, const std::string& digest) {
    std::ofstream os(dir / "manifest.txt");
    if (!os) throw DataError("cannot write manifest in " + dir.string());
    os << "version = " << kVersion << '\n';
    os << "generator = " << kGeneratorName << '\n';
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    os << "started = " << stamp << '\n';
    os << "input_digest = " << (digest.empty() ? "synthetic" : digest) << '\n';
    os << "resolved_tau = " << run.tau << '\n';
    os << "resolved_iters = " << run.iters << '\n';
    os << "resolved_replication = " << run.replication << '\n';
    os << render_config(cfg);
}

int run_online_cmd(const ExperimentConfig& cfg, const std::string& out_flag) {
    const auto div = resolve_divergence(cfg, read_matrix_file);
    DataSource probe = open_source(cfg, div, nullptr);
    const ResolvedRun run = resolve_run(cfg, probe.source_samples);
    DataSource src = open_source(cfg, div, &run);

    const fs::path out = resolve_out_dir(out_flag);
    write_manifest(out, cfg, run, src.digest);

    const LearnerConfig lc = make_learner_config(cfg, div, src.dim, run);
    OnlineResult res = run_online(lc, *src.stream);
    write_trace_csv_file((out / "trace.csv").string(), res.trace);
    write_matrix_file((out / "W_final.txt").string(), res.W);
    std::cout << "wrote " << (out / "trace.csv").string() << " ("
              << res.trace.records.size() << " records)\n";
    return 0;
}

int run_batch_cmd(const ExperimentConfig& cfg, const std::string& out_flag) {
    const auto div = resolve_divergence(cfg, read_matrix_file);
    Matrix v;
    std::string digest;
    if (cfg.data == "synth") {
        SyntheticSpec spec;
        spec.F = cfg.f;
        spec.K_truth = cfg.k_truth;
        spec.N = cfg.n_samples;
        spec.kappa = cfg.kappa;
        spec.sigma = cfg.sigma;
        spec.noise = resolve_noise(cfg, div);
        spec.clip_hi = cfg.clip_hi;
        v = add_noise(gen_ground_truth(spec, cfg.seed).V, spec.noise, cfg.seed);
    } else {
        v = read_matrix_file(cfg.data);
        digest = file_digest(cfg.data);
    }
    for (std::size_t i = 0; i < v.rows(); ++i)
        for (std::size_t j = 0; j < v.cols(); ++j)
            v(i, j) = std::clamp(v(i, j), cfg.floor, cfg.clip_hi);

    const fs::path out = resolve_out_dir(out_flag);
    ResolvedRun run;
    run.tau = v.cols();
    run.iters = static_cast<std::uint64_t>(cfg.batch_iters);
    run.replication = 1;
    run.total_samples = v.cols();
    write_manifest(out, cfg, run, digest);

    LearnerConfig lc = make_learner_config(
        cfg, div, v.rows(), ResolvedRun{1, 1, 1, v.cols()});
    lc.T = 1;  // unused by the batch solver
    BatchReport rep = run_batch(v, lc, cfg.batch_iters);

    LossTrace trace;
    trace.seed = cfg.seed;
    for (std::size_t i = 0; i < rep.objective_per_iter.size(); ++i) {
        TraceRecord rec;
        rec.t = i + 1;
        rec.samples_seen = v.cols() * (i + 1);
        rec.empirical_loss = rep.objective_per_iter[i];
        rec.eta = 0.0;
        trace.records.push_back(rec);
    }
    write_trace_csv_file((out / "trace.csv").string(), trace);
    write_matrix_file((out / "W_final.txt").string(), rep.W);
    std::cout << "wrote " << (out / "trace.csv").string() << " ("
              << trace.records.size() << " records)\n";
    return 0;
}

int run_gen_synth(const ExperimentConfig& cfg, const std::string& out_file,
                  const std::string& clean_file) {
    const auto div = resolve_divergence(cfg, read_matrix_file);
    SyntheticSpec spec;
    spec.F = cfg.f;
    spec.K_truth = cfg.k_truth;
    spec.N = cfg.n_samples;
    spec.kappa = cfg.kappa;
    spec.sigma = cfg.sigma;
    spec.noise = resolve_noise(cfg, div);
    spec.clip_hi = cfg.clip_hi;
    const GroundTruth gt = gen_ground_truth(spec, cfg.seed);
    Matrix noisy = add_noise(gt.V, spec.noise, cfg.seed);
    for (std::size_t i = 0; i < noisy.rows(); ++i)
        for (std::size_t j = 0; j < noisy.cols(); ++j)
            noisy(i, j) = std::clamp(noisy(i, j), 0.0, spec.clip_hi);
    write_matrix_file(out_file, noisy);
    if (!clean_file.empty()) write_matrix_file(clean_file, gt.V);
    std::cout << "wrote " << out_file << " (" << noisy.rows() << "x" << noisy.cols()
              << ", snr " << snr_db(gt.V, noisy) << " dB)\n";
    return 0;
}

int run_tfidf(const std::string& in_file, const std::string& out_file, std::size_t top,
              double scale) {
    Matrix counts = read_matrix_file(in_file);
    Matrix weighted = tfidf_transform(counts);
    if (top > 0) weighted = select_top_rows(weighted, top);
    if (scale != 1.0) weighted *= scale;
    write_matrix_file(out_file, weighted);
    std::cout << "wrote " << out_file << " (" << weighted.rows() << "x" << weighted.cols()
              << ")\n";
    return 0;
}

int run_corrupt_images(const std::string& in_file, const std::string& out_file, double frac,
                       std::uint64_t seed) {
    Matrix images = read_matrix_file(in_file);
    write_matrix_file(out_file, salt_pepper(images, frac, seed));
    std::cout << "wrote " << out_file << '\n';
    return 0;
}

// Built-in invariant suite: quick gradient, projection and family checks.
int run_check() {
    int failures = 0;
    auto report = [&](const std::string& name, bool ok) {
        std::cout << (ok ? "ok   " : "FAIL ") << name << '\n';
        if (!ok) ++failures;
    };

    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> unif(0.2, 3.0);
    auto rand_vec = [&](std::size_t n) {
        Vector v(n);
        for (double& x : v) x = unif(rng);
        return v;
    };

    const std::vector<DivergenceSpec> catalog = {
        DivergenceSpec::csiszar_l1(), DivergenceSpec::alpha(1.7), DivergenceSpec::hellinger(),
        DivergenceSpec::kl(),         DivergenceSpec::beta(1.5),  DivergenceSpec::is(),
        DivergenceSpec::squared_l2(), DivergenceSpec::robust_l1(), DivergenceSpec::robust_l2(),
        DivergenceSpec::huber(1.0),
        DivergenceSpec::mahalanobis(Matrix::from_rows({{2.0, 0.5}, {0.5, 1.0}}))};

    bool nonneg = true;
    for (const auto& div : catalog)
        for (int rep = 0; rep < 200; ++rep) {
            const std::size_t n = div.kind() == DivKind::Mahalanobis ? 2 : 4;
            const Vector x = rand_vec(n);
            nonneg = nonneg && eval(div, x, rand_vec(n)) >= 0.0 && eval(div, x, x) == 0.0;
        }
    report("divergence nonnegativity and identity", nonneg);

    bool grads = true;
    for (const auto& div : catalog) {
        if (!class_of(div).in_D1) continue;
        const std::size_t n = div.kind() == DivKind::Mahalanobis ? 2 : 4;
        const Vector x = rand_vec(n);
        Vector y = rand_vec(n);
        const Vector g = grad_y(div, x, y);
        for (std::size_t i = 0; i < n; ++i) {
            const double step = 1e-6 * std::max(1.0, std::fabs(y[i]));
            Vector yp = y, ym = y;
            yp[i] += step;
            ym[i] -= step;
            const double fd = (eval(div, x, yp) - eval(div, x, ym)) / (2.0 * step);
            if (std::fabs(fd - g[i]) / std::max(1.0, norm_inf(g)) > 1e-5) grads = false;
        }
    }
    report("analytic gradients match finite differences", grads);

    bool fam = true;
    for (int rep = 0; rep < 50; ++rep) {
        const Vector x = rand_vec(3);
        const Vector y = rand_vec(3);
        fam = fam &&
              std::fabs(eval(DivergenceSpec::alpha(0.5), x, y) -
                        eval(DivergenceSpec::hellinger(), x, y)) < 1e-12 &&
              std::fabs(eval(DivergenceSpec::beta(2.0), x, y) -
                        eval(DivergenceSpec::squared_l2(), x, y)) < 1e-12;
    }
    report("family limit identities", fam);

    bool proj = true;
    const DictConstraint dc(3, 4, 1e-8);
    const CoeffConstraint cc(4, 1e-8, 1e8);
    for (int rep = 0; rep < 200; ++rep) {
        std::uniform_real_distribution<double> wide(-2.0, 2.0);
        Matrix w(3, 4);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 4; ++j) w(i, j) = wide(rng);
        const Matrix p = project_C(w, dc);
        proj = proj && is_member(p, dc) && (project_C(p, dc) - p).frobenius_norm() == 0.0;
        Vector h(4);
        for (double& v : h) v = wide(rng);
        const Vector ph = project_H(h, cc);
        proj = proj && is_member(ph, cc);
    }
    report("projections feasible and idempotent", proj);

    std::cout << (failures == 0 ? "all checks passed\n" : "checks FAILED\n");
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online NMF with general divergences"};
    app.require_subcommand(1);

    std::string config_path, out_flag = "run", out_file, clean_file, in_file;
    std::uint64_t seed_flag = 0;
    bool seed_given = false;
    std::size_t top_rows = 0;
    double scale = 1.0, frac = 0.3;

    auto add_run_opts = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat key = value config file");
        sub->add_option("--seed", seed_flag, "master seed")->each([&](const std::string&) {
            seed_given = true;
        });
        sub->add_option("--out", out_flag, "output directory");
        sub->allow_extras();  // --key value overrides for any config key
    };

    CLI::App* online = app.add_subcommand("online", "streaming dictionary learning");
    add_run_opts(online);
    CLI::App* batch = app.add_subcommand("batch", "full-batch baseline");
    add_run_opts(batch);

    CLI::App* gen = app.add_subcommand("gen-synth", "generate a noisy synthetic matrix");
    gen->add_option("--config", config_path);
    gen->add_option("--seed", seed_flag)->each([&](const std::string&) { seed_given = true; });
    gen->add_option("--out", out_file, "output matrix file")->required();
    gen->add_option("--clean", clean_file, "also write the noiseless matrix here");
    gen->allow_extras();

    CLI::App* tfidf = app.add_subcommand("tfidf", "term-document counts to TF-IDF");
    tfidf->add_option("--in", in_file)->required();
    tfidf->add_option("--out", out_file)->required();
    tfidf->add_option("--top", top_rows, "keep this many largest-l1 rows");
    tfidf->add_option("--scale", scale, "entrywise scale factor");

    CLI::App* corrupt = app.add_subcommand("corrupt-images", "add salt-and-pepper noise");
    corrupt->add_option("--in", in_file)->required();
    corrupt->add_option("--out", out_file)->required();
    corrupt->add_option("--frac", frac, "fraction of pixels per column");
    corrupt->add_option("--seed", seed_flag);

    CLI::App* check = app.add_subcommand("check", "run the built-in invariant suite");
    (void)check;

    std::string sweep;
    online->add_option("--sweep", sweep, "key=v1,v2,... runs the cross product serially");

    try {
        app.parse(argc, argv);

        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = parse_config_file(config_path);
        if (online->parsed()) apply_overrides(cfg, online->remaining());
        if (batch->parsed()) apply_overrides(cfg, batch->remaining());
        if (gen->parsed()) apply_overrides(cfg, gen->remaining());
        if (seed_given) cfg.seed = seed_flag;

        if (online->parsed()) {
            if (sweep.empty()) return run_online_cmd(cfg, out_flag);
            const auto eq = sweep.find('=');
            if (eq == std::string::npos) throw ConfigError("--sweep expects key=v1,v2,...");
            const std::string key = sweep.substr(0, eq);
            std::istringstream vs(sweep.substr(eq + 1));
            int rc = 0;
            for (std::string val; std::getline(vs, val, ',');) {
                ExperimentConfig c = cfg;
                set_config_key(c, key, val);
                rc |= run_online_cmd(c, out_flag + "/" + key + "-" + val);
            }
            return rc;
        }
        if (batch->parsed()) return run_batch_cmd(cfg, out_flag);
        if (gen->parsed()) return run_gen_synth(cfg, out_file, clean_file);
        if (tfidf->parsed()) return run_tfidf(in_file, out_file, top_rows, scale);
        if (corrupt->parsed()) return run_corrupt_images(in_file, out_file, frac, seed_flag);
        if (check->parsed()) return run_check();
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
