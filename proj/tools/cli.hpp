#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "manifest.hpp"
#include "tnfcm/tnfcm.hpp"

namespace tnfcm::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char kSynthManifest[] = "run_manifest.json";

/// Raised for bad flag values detected after parsing; mapped to exit code 2.
class UsageError : public Error {
public:
    using Error::Error;
};

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ','))
        if (!part.empty()) out.push_back(part);
    return out;
}

inline std::vector<std::size_t> parse_ks(const std::string& s) {
    std::vector<std::size_t> ks;
    for (const std::string& p : split_list(s)) {
        std::size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(p, &pos);
        } catch (const std::exception&) {
            throw UsageError("--k: '" + p + "' is not an integer");
        }
        if (pos != p.size()) throw UsageError("--k: '" + p + "' is not an integer");
        if (v < 1) throw UsageError("--k: K must be >= 1 (got " + p + ")");
        ks.push_back(static_cast<std::size_t>(v));
    }
    if (ks.empty()) throw UsageError("--k: at least one K is required");
    return ks;
}

inline EvalMode parse_mode(const std::string& s) {
    if (s == "open") return EvalMode::open;
    if (s == "known-target") return EvalMode::known_target;
    throw UsageError("--mode must be 'open' or 'known-target' (got '" + s + "')");
}

/// Turns a JSON object of flag values into command-line tokens. Arrays are
/// joined with commas; `true` emits a bare flag and `false` nothing.
inline std::vector<std::string> config_tokens(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw UsageError("cannot read --config file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError("--config " + path.string() + ": invalid JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw UsageError("--config " + path.string() + ": expected a JSON object");
    std::vector<std::string> out;
    auto scalar = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    for (const auto& [key, value] : j.items()) {
        const std::string flag = "--" + key;
        if (value.is_boolean()) {
            if (value.get<bool>()) out.push_back(flag);
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& v : value) joined += (joined.empty() ? "" : ",") + scalar(v);
            out.push_back(flag);
            out.push_back(joined);
        } else if (!value.is_null()) {
            out.push_back(flag);
            out.push_back(scalar(value));
        }
    }
    return out;
}

/// Moves any `--config FILE` after the subcommand name in front of its
/// explicit flags, so explicit values (parsed later) take precedence.
inline std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::size_t sub = 1;
    while (sub < args.size() && args[sub].starts_with("-")) ++sub;
    if (sub >= args.size()) return args;
    std::vector<std::string> rest;
    std::optional<fs::path> config;
    for (std::size_t i = sub + 1; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config requires a path");
            config = args[++i];
        } else if (args[i].starts_with("--config=")) {
            config = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(sub) + 1);
    if (config) {
        auto extra = config_tokens(*config);
        out.insert(out.end(), extra.begin(), extra.end());
    }
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

struct SynthOptions {
    SyntheticConfig config;
    std::string out;
};

struct TrainOptions {
    TrainConfig config;
    std::string corpus;
    std::string out;
    std::string log;
    std::string modalities = "v,t";
    std::string model = "transnfcm";
    bool no_validate = false;
    unsigned threads = 1;
};

struct EvalOptions {
    std::string corpus;
    std::string checkpoint;
    std::string report;
    std::size_t negatives = 100;
    std::string ks = "5,10,20,40";
    std::string split = "test";
    std::string mode = "open";
    std::string part = "all";
    std::uint64_t seed = 0;
    std::string candidates_out;
    std::string candidates_in;
    unsigned threads = 1;
};

inline nlohmann::ordered_json option_values(const CLI::App& sub) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        if (opt->get_name() == "--help" || opt->get_name().empty()) continue;
        const std::string key = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
        if (opt->get_expected_max() == 0) {
            j[key] = opt->count() > 0;
        } else if (!opt->results().empty()) {
            j[key] = opt->results().back();
        } else {
            j[key] = opt->get_default_str();
        }
    }
    return j;
}

inline int cmd_synth(const SynthOptions& o, const CLI::App& sub) {
    RunManifest manifest;
    manifest.command = "synth";
    manifest.flags = option_values(sub);
    manifest.seeds["seed"] = o.config.seed;
    o.config.validate();
    const fs::path dir(o.out);
    const SyntheticCorpus data = generate_synthetic(o.config, dir);
    manifest.outputs = {dir / kItemsFile, dir / kPairsFile};
    for (const auto& m : o.config.modalities) manifest.outputs.push_back(dir / (m + kFeatureExtension));
    manifest.outputs.push_back(dir / kSynthConfigFile);
    manifest.write(dir / kSynthManifest);
    log(LogLevel::info, "wrote ", data.items.size(), " items and ", data.pairs.size(), " pairs to ", dir.string());
    return kExitOk;
}

inline int cmd_train(TrainOptions o, const CLI::App& sub) {
    TrainConfig cfg = o.config;
    cfg.kind = parse_kind(o.model);
    cfg.modalities.clear();
    for (const auto& m : split_list(o.modalities)) cfg.modalities.push_back(canonical_modality(m));
    cfg.validate_each_epoch = !o.no_validate;
    cfg.validate();
    const fs::path out(o.out);
    const fs::path log_path = o.log.empty() ? fs::path(o.out + ".log.jsonl") : fs::path(o.log);
    const fs::path best_path(o.out + ".best");

    RunManifest manifest;
    manifest.command = "train";
    manifest.flags = option_values(sub);
    manifest.seeds["seed"] = cfg.seed;
    manifest.seeds["train_tuples"] = derive_seed(cfg.seed, "train_tuples");
    manifest.seeds["dropout"] = derive_seed(cfg.seed, "dropout");
    manifest.seeds["validation"] = derive_seed(cfg.seed, "validation");
    manifest.inputs = {fs::path(o.corpus)};

    const Corpus corpus = load_corpus(o.corpus);
    std::ofstream log_file(log_path, std::ios::binary | std::ios::trunc);
    if (!log_file) throw Error("cannot open " + log_path.string() + " for writing");
    const TrainingRun run = train(corpus, cfg, [&](const EpochStats& s) {
        log_file << stats_to_json(s).dump() << '\n';
        log_file.flush();
        log(LogLevel::info, "epoch ", s.epoch, " loss ", s.mean_loss, " active ", s.active_fraction,
            s.validation_auc ? detail::concat(" val_auc ", *s.validation_auc) : std::string());
    });
    log_file.close();
    save_checkpoint(run.final_model, out);
    manifest.outputs = {out, log_path};
    if (run.best_model) {
        save_checkpoint(*run.best_model, best_path);
        manifest.outputs.push_back(best_path);
    }
    manifest.write(o.out + ".manifest.json");
    return kExitOk;
}

inline int cmd_eval(const EvalOptions& o, const CLI::App& sub) {
    EvalConfig cfg;
    if (o.negatives == 0) throw UsageError("--negatives must be >= 1");
    cfg.negatives = o.negatives;
    cfg.ks = parse_ks(o.ks);
    cfg.mode = parse_mode(o.mode);
    cfg.part = parse_part(o.part);
    cfg.seed = o.seed;
    cfg.threads = std::max(1u, o.threads);
    const auto split = parse_split(o.split);
    if (!split) throw UsageError("--split must be train, val or test (got '" + o.split + "')");
    if (!o.candidates_in.empty() && !o.candidates_out.empty())
        throw UsageError("--candidates-in and --candidates-out are mutually exclusive");

    RunManifest manifest;
    manifest.command = "eval";
    manifest.flags = option_values(sub);
    manifest.seeds["seed"] = cfg.seed;
    manifest.inputs = {fs::path(o.corpus), fs::path(o.checkpoint)};

    const Corpus corpus = load_corpus(o.corpus);
    const Model model = load_checkpoint(o.checkpoint);
    model.check_compatible(corpus);
    if (cfg.part != ScorePart::all && model.config.kind != ModelKind::transnfcm)
        throw UsageError("--part " + o.part + " is only defined for transnfcm checkpoints");

    std::optional<std::vector<CandidateSet>> frozen;
    if (!o.candidates_in.empty()) {
        frozen = read_candidate_file(o.candidates_in, corpus);
        manifest.inputs.push_back(o.candidates_in);
    } else if (!o.candidates_out.empty()) {
        frozen = build_candidates(corpus, model.index, *split, cfg).sets;
        write_candidate_file(o.candidates_out, corpus, *frozen);
    }
    EvalReport report = evaluate(model, corpus, *split, cfg, frozen ? &*frozen : nullptr);
    write_atomically(o.report, report_to_json(report).dump(2) + "\n");
    manifest.outputs = {fs::path(o.report)};
    if (!o.candidates_out.empty()) manifest.outputs.push_back(o.candidates_out);
    manifest.write(o.report + ".manifest.json");
    log(LogLevel::info, "AUC ", 100.0 * report.auc, "% over ", report.n_queries, " queries");
    return kExitOk;
}

/// Entry point shared by the executable and the tests. `args[0]` is the
/// program name. Returns the process exit code.
inline int run_cli(std::vector<std::string> args) {
    try {
        args = expand_config(args);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    CLI::App app{"Translation-based compatibility modeling: synthetic data, training, evaluation"};
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    bool quiet = false, verbose = false;
    app.add_flag("-q,--quiet", quiet, "Only log errors");
    app.add_flag("-v,--verbose", verbose, "Log debug messages");

    SynthOptions so;
    CLI::App* synth = app.add_subcommand("synth", "Generate a planted-translation corpus");
    synth->add_option("--categories", so.config.num_categories, "Number of categories")->capture_default_str();
    synth->add_option("--items-per-cat", so.config.items_per_category, "Items per category")->capture_default_str();
    synth->add_option("--latent-dim", so.config.latent_dim, "Latent dimension")->capture_default_str();
    synth->add_option("--feature-dim", so.config.feature_dim, "Raw feature dimension")->capture_default_str();
    synth->add_option("--noise", so.config.noise_sigma, "Norm of the pair noise")->capture_default_str();
    synth->add_option("--pairs-per-relation", so.config.pairs_per_relation, "Positive pairs per relation")
        ->capture_default_str();
    synth->add_option("--style-spread-in", so.config.style_spread_in_span,
                      "Style spread inside the span of the category offsets")
        ->capture_default_str();
    synth->add_option("--style-spread-off", so.config.style_spread_off_span, "Style spread outside that span")
        ->capture_default_str();
    synth->add_option("--category-spread", so.config.category_spread, "Spread of the category offsets")
        ->capture_default_str();
    synth->add_option("--head-stretch", so.config.head_translation_stretch,
                      "Length factor of the second relation out of category 0")
        ->capture_default_str();
    synth->add_option("--seed", so.config.seed, "Random seed")->capture_default_str();
    synth->add_option("--out", so.out, "Output directory")->required();

    TrainOptions to;
    CLI::App* trn = app.add_subcommand("train", "Train a model on a corpus directory");
    trn->add_option("--corpus", to.corpus, "Corpus directory")->required();
    trn->add_option("--model", to.model, "transnfcm, trinet, sianet, bpr or csn")->capture_default_str();
    trn->add_option("--modalities", to.modalities, "Comma-separated modalities (v = visual, t = textual)")
        ->capture_default_str();
    trn->add_option("--dim", to.config.embed_dim, "Embedding dimension per modality")->capture_default_str();
    trn->add_option("--hidden-dim", to.config.hidden_dim, "Hidden ReLU layer width (0 = none)")->capture_default_str();
    trn->add_option("--epochs", to.config.epochs, "Training epochs")->capture_default_str();
    trn->add_option("--batch", to.config.batch_size, "5-tuples per minibatch")->capture_default_str();
    trn->add_option("--lr", to.config.base_lr, "Base learning rate")->capture_default_str();
    trn->add_option("--lr-drop-every", to.config.lr_drop_every, "Epochs between lr drops")->capture_default_str();
    trn->add_option("--lr-drop-factor", to.config.lr_drop_factor, "Divisor applied at each drop")->capture_default_str();
    trn->add_option("--encoder-lr-scale", to.config.encoder_lr_scale, "Encoder lr multiplier")->capture_default_str();
    trn->add_option("--momentum", to.config.momentum, "Momentum factor")->capture_default_str();
    trn->add_option("--margin", to.config.margin, "Ranking margin")->capture_default_str();
    trn->add_option("--contrastive-margin", to.config.contrastive_margin, "SiaNet margin")->capture_default_str();
    trn->add_option("--csn-l1", to.config.csn_l1, "CSN mask L1 weight")->capture_default_str();
    trn->add_option("--dropout", to.config.dropout_rate, "Input dropout rate")->capture_default_str();
    trn->add_option("--negatives-per-side", to.config.negatives_per_side, "Corruptions per side and positive")
        ->capture_default_str();
    trn->add_option("--validation-negatives", to.config.validation_negatives, "Negatives for validation AUC")
        ->capture_default_str();
    trn->add_flag("--untied", to.config.untied_directions, "Independent vectors for the two relation directions");
    trn->add_flag("--no-validate", to.no_validate, "Skip per-epoch validation");
    trn->add_option("--seed", to.config.seed, "Random seed")->capture_default_str();
    trn->add_option("--out", to.out, "Checkpoint path")->required();
    trn->add_option("--log", to.log, "JSON-lines epoch log (default: <out>.log.jsonl)");
    trn->add_option("--threads", to.threads, "Worker cap")->capture_default_str();

    EvalOptions eo;
    CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
    ev->add_option("--corpus", eo.corpus, "Corpus directory")->required();
    ev->add_option("--checkpoint", eo.checkpoint, "Checkpoint path")->required();
    ev->add_option("--negatives", eo.negatives, "Negatives per query")->capture_default_str();
    ev->add_option("--k", eo.ks, "Comma-separated Hit@K cutoffs")->capture_default_str();
    ev->add_option("--split", eo.split, "train, val or test")->capture_default_str();
    ev->add_option("--mode", eo.mode, "open or known-target")->capture_default_str();
    ev->add_option("--part", eo.part, "all, global or category")->capture_default_str();
    ev->add_option("--seed", eo.seed, "Candidate sampling seed")->capture_default_str();
    ev->add_option("--report", eo.report, "Report JSON path")->required();
    ev->add_option("--candidates-out", eo.candidates_out, "Write the sampled candidates (JSON lines)");
    ev->add_option("--candidates-in", eo.candidates_in, "Evaluate on frozen candidates (JSON lines)");
    ev->add_option("--threads", eo.threads, "Worker cap")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    if (quiet) log_threshold() = LogLevel::error;
    if (verbose) log_threshold() = LogLevel::debug;

    try {
        try {
            if (synth->parsed()) return cmd_synth(so, *synth);
            if (trn->parsed()) return cmd_train(to, *trn);
            return cmd_eval(eo, *ev);
        } catch (const ConfigError& e) {
            throw UsageError(e.what());
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace tnfcm::cli
