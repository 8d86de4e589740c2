// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#include "msma/cli/commands.hpp"

#include "msma/checkpoint.hpp"
#include "msma/errors.hpp"
#include "msma/toy.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <ostream>
#include <sstream>

namespace msma::cli {

namespace {

auto hash_u64(const RunConfig& cfg) -> std::uint64_t
{
    return std::stoull(cfg.hash, nullptr, 16);
}

auto hash_comment(const RunConfig& cfg) -> std::string
{
    return "# config_hash=" + cfg.hash + "\n";
}

auto require_dataset(const RunConfig& cfg, const std::string& spec, const char* key) -> Dataset
{
    if (spec.empty()) {
        throw ConfigError(std::string("config key '") + key + "' is required for this command");
    }
    return load_dataset(spec, cfg.base_dir);
}

auto method_name(AuxVariant v) -> std::string
{
    switch (v) {
    case AuxVariant::gmm:
        return "MSMA-GMM";
    case AuxVariant::flow:
        return "MSMA-Flow";
    case AuxVariant::knn:
        return "MSMA-KNN";
    }
    return "MSMA";
}

auto scaled(const std::optional<FeatureScaler>& scaler, const Dataset& ds) -> Tensor
{
    if (!scaler) {
        return ds.samples;
    }
    if (scaler->dim() != ds.samples.cols()) {
        throw DomainError("dataset '" + ds.name + "' has " + std::to_string(ds.samples.cols())
                          + " features, the model expects " + std::to_string(scaler->dim()));
    }
    return scaler->apply(ds.samples);
}

auto load_oracle(const std::string& path) -> GaussianMixture
{
    try {
        return mixture_from_json(read_text_file(path));
    } catch (const DomainError& e) {
        throw ConfigError("bad mixture file '" + path + "': " + e.what());
    }
}

void write_toy_csv(const std::filesystem::path& path, const RunConfig& cfg, const std::vector<ToyRow>& rows)
{
    std::string text = hash_comment(cfg) + "region,x,sigma,score,score_norm_scaled\n";
    for (const auto& r : rows) {
        text += r.region + "," + format_double(r.x) + "," + format_double(r.sigma) + "," + format_double(r.score)
                + "," + format_double(r.score_norm_scaled) + "\n";
    }
    write_text_file(path, text);
}

auto check_same_schedule(const ScoreMatrix& a, const ScoreMatrix& b, const std::string& what) -> void
{
    if (a.schedule != b.schedule || a.sigma_scaled != b.sigma_scaled) {
        throw ConfigError(what + " was computed with a different noise schedule or scaling");
    }
}

} // namespace

auto checkpoint_path(const RunConfig& cfg) -> std::filesystem::path
{
    return cfg.output_dir / "checkpoint.msma";
}

auto norms_path(const RunConfig& cfg, const std::string& split) -> std::filesystem::path
{
    return cfg.output_dir / ("norms_" + split + ".csv");
}

auto outlier_split(std::size_t index) -> std::string
{
    return "outlier_" + std::to_string(index + 1);
}

auto aux_model_path(const RunConfig& cfg, AuxVariant variant) -> std::filesystem::path
{
    return cfg.output_dir / ("aux_" + std::string(variant_name(variant)) + ".json");
}

void cmd_train(const RunConfig& cfg, std::ostream& out)
{
    const Dataset data = require_dataset(cfg, cfg.train_data, "data.train");
    std::optional<FeatureScaler> scaler;
    if (cfg.rescale) {
        scaler = FeatureScaler::fit_minmax(data.samples);
    }
    const Tensor x = scaled(scaler, data);
    const SigmaSchedule schedule = cfg.schedule();

    Rng init = Rng(cfg.train.seed).split(3);
    ScoreNet net(x.cols(), schedule, cfg.hidden, init);

    Checkpoint ckpt;
    ckpt.scaler = scaler;
    ckpt.config_hash = hash_u64(cfg);
    const auto path = checkpoint_path(cfg);
    TrainConfig tc = cfg.train;
    tc.on_checkpoint = [&](std::size_t step, const ScoreNet& current) {
        ckpt.net = current;
        ckpt.step = step;
        save_checkpoint(path, ckpt);
    };
    const TrainResult result = train(std::move(net), x, schedule, tc);

    std::string loss = hash_comment(cfg) + "step,loss,learning_rate\n";
    for (std::size_t i = 0; i < result.loss_history.size(); ++i) {
        loss += std::to_string(i + 1) + "," + format_double(result.loss_history[i]) + ","
                + format_double(learning_rate_at(cfg.train, i + 1)) + "\n";
    }
    write_text_file(cfg.output_dir / "loss.csv", loss);
    write_text_file(cfg.output_dir / "config.ini", hash_comment(cfg) + to_ini(cfg));
    out << "trained " << cfg.train.steps << " steps on " << data.size() << " samples, final loss "
        << result.loss_history.back() << "\nwrote " << path.string() << "\n";
}

void cmd_norms(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint, std::ostream& out)
{
    ScoreSource source;
    std::optional<FeatureScaler> scaler;
    std::size_t dim = 0;
    if (checkpoint) {
        Checkpoint ckpt = load_checkpoint(*checkpoint);
        if (ckpt.net.schedule() != cfg.schedule()) {
            throw ConfigError("checkpoint '" + checkpoint->string() + "' was trained with "
                              + std::to_string(ckpt.net.levels()) + " noise levels from "
                              + format_double(ckpt.net.schedule().high()) + " to "
                              + format_double(ckpt.net.schedule().low()) + ", which differs from the config schedule");
        }
        dim = ckpt.net.dim();
        scaler = ckpt.scaler;
        source = net_source(std::make_shared<const ScoreNet>(std::move(ckpt.net)),
                            "checkpoint:" + checkpoint->filename().string() + ":step=" + std::to_string(ckpt.step));
    } else {
        if (cfg.oracle_path.empty()) {
            throw ConfigError("analytic norms need 'data.oracle' (a mixture JSON file)");
        }
        GaussianMixture gm = load_oracle(cfg.oracle_path);
        if (cfg.rescale) {
            const Dataset train = require_dataset(cfg, cfg.train_data, "data.train");
            if (train.samples.cols() != gm.dim()) {
                throw DomainError("oracle mixture is " + std::to_string(gm.dim()) + "-dimensional but the data has "
                                  + std::to_string(train.samples.cols()) + " features");
            }
            scaler = FeatureScaler::fit_minmax(train.samples);
            gm = affine_mixture(gm, scaler->offset, scaler->scale);
        }
        dim = gm.dim();
        source = analytic_source(gm, cfg.schedule());
    }

    std::vector<std::pair<std::string, std::string>> splits;
    if (!cfg.train_data.empty()) {
        splits.emplace_back("train", cfg.train_data);
    }
    if (!cfg.test_data.empty()) {
        splits.emplace_back("test", cfg.test_data);
    }
    for (std::size_t i = 0; i < cfg.outlier_data.size(); ++i) {
        splits.emplace_back(outlier_split(i), cfg.outlier_data[i]);
    }
    if (splits.empty()) {
        throw ConfigError("no datasets configured (data.train, data.test, data.outliers)");
    }
    for (const auto& [split, spec] : splits) {
        const Dataset ds = load_dataset(spec, cfg.base_dir);
        const Tensor x = scaled(scaler, ds);
        if (x.cols() != dim) {
            throw DomainError("dataset '" + spec + "' has " + std::to_string(x.cols())
                              + " features, the score model expects " + std::to_string(dim));
        }
        ScoreMatrix m = compute_norms(source, x, cfg.norms);
        m.dataset_id = ds.name;
        m.config_hash = cfg.hash;
        const auto path = norms_path(cfg, split);
        save_score_matrix(path, m);
        out << "wrote " << path.string() << " (" << m.values.rows() << " x " << m.values.cols() << ")\n";
    }
}

void cmd_fit_aux(const RunConfig& cfg, const std::optional<std::filesystem::path>& norms, std::ostream& out)
{
    const auto path = norms.value_or(norms_path(cfg, "train"));
    const ScoreMatrix m = load_score_matrix(path);
    if (m.schedule != cfg.schedule()) {
        throw ConfigError("'" + path.string() + "' has " + std::to_string(m.values.cols())
                          + " noise levels that do not match the config schedule (" + std::to_string(cfg.levels)
                          + " levels)");
    }
    const AuxModel model = AuxModel::fit(m.values, cfg.aux);
    const auto model_path = aux_model_path(cfg, cfg.aux.variant);
    save_aux_model(model_path, model, cfg.hash);
    out << "wrote " << model_path.string() << "\n";
    if (model.selection()) {
        const auto trace = cfg.output_dir / "gmm_trace.csv";
        write_gmm_trace(trace, *model.selection(), cfg.hash);
        out << "selected k = " << model.selection()->selected_k << "\nwrote " << trace.string() << "\n";
    }
    if (!model.flow_loss().empty()) {
        std::string text = hash_comment(cfg) + "epoch,loss\n";
        for (std::size_t i = 0; i < model.flow_loss().size(); ++i) {
            text += std::to_string(i + 1) + "," + format_double(model.flow_loss()[i]) + "\n";
        }
        write_text_file(cfg.output_dir / "flow_loss.csv", text);
    }
}

auto cmd_eval(const RunConfig& cfg, const EvalRequest& request, std::ostream& out) -> EvalResult
{
    const AuxModel model = load_aux_model(request.model.value_or(aux_model_path(cfg, cfg.aux.variant)));
    const ScoreMatrix inliers = load_score_matrix(request.inliers.value_or(norms_path(cfg, "test")));
    std::vector<std::filesystem::path> outlier_paths = request.outliers;
    if (outlier_paths.empty()) {
        for (std::size_t i = 0; i < cfg.outlier_data.size(); ++i) {
            outlier_paths.push_back(norms_path(cfg, outlier_split(i)));
        }
    }
    if (outlier_paths.empty()) {
        throw ConfigError("eval needs at least one outlier norms file (data.outliers or --outliers)");
    }
    if (inliers.values.cols() != model.dim()) {
        throw ConfigError("auxiliary model expects " + std::to_string(model.dim()) + " levels, inlier norms have "
                          + std::to_string(inliers.values.cols()));
    }

    LabeledScores pooled;
    pooled.inlier = model.inlier_scores(inliers.values);
    EvalResult result;
    std::vector<std::pair<std::string, LabeledScores>> sets;
    for (const auto& p : outlier_paths) {
        const ScoreMatrix m = load_score_matrix(p);
        check_same_schedule(inliers, m, "'" + p.string() + "'");
        LabeledScores ls;
        ls.inlier = pooled.inlier;
        ls.outlier = model.inlier_scores(m.values);
        pooled.outlier.insert(pooled.outlier.end(), ls.outlier.begin(), ls.outlier.end());
        sets.emplace_back(m.dataset_id.empty() ? p.stem().string() : m.dataset_id, std::move(ls));
    }
    result.pooled = evaluate(pooled, cfg.fpr_level);
    for (const auto& [name, ls] : sets) {
        result.per_outlier.emplace_back(name, evaluate(ls, cfg.fpr_level));
    }

    const std::string method = method_name(model.variant());
    const std::string variant(variant_name(model.variant()));
    std::string report = "scope = all\n" + report_text(result.pooled, cfg.hash);
    std::string table = hash_comment(cfg) + table_header(cfg.layout) + "\n" + table_row(method + "/all", result.pooled, cfg.layout) + "\n";
    for (const auto& [name, r] : result.per_outlier) {
        report += "\nscope = " + name + "\n" + report_text(r, cfg.hash);
        table += table_row(method + "/" + name, r, cfg.layout) + "\n";
    }
    write_text_file(cfg.output_dir / ("report_" + variant + ".txt"), report);
    write_text_file(cfg.output_dir / ("results_" + variant + ".csv"), table);
    out << table_header(cfg.layout) << "\n" << table.substr(table.find('\n', table.find('\n') + 1) + 1);
    return result;
}

void cmd_toy(const RunConfig& cfg, std::ostream& out)
{
    const ToyScenario scn =
        cfg.toy_scenario.empty() ? default_toy_scenario() : toy_scenario_from_json(read_text_file(cfg.toy_scenario));
    write_toy_csv(cfg.output_dir / "toy_analysis.csv", cfg, toy_analysis(scn));
    Rng rng = Rng(cfg.seed).split(6);
    write_toy_csv(cfg.output_dir / "toy_samples.csv", cfg, toy_samples(scn, cfg.toy_samples, rng));
    auto j = nlohmann::ordered_json::parse(toy_scenario_to_json(scn));
    j["config_hash"] = cfg.hash;
    write_text_file(cfg.output_dir / "toy_scenario.json", j.dump(2) + "\n");
    out << "wrote toy_analysis.csv, toy_samples.csv and toy_scenario.json to " << cfg.output_dir.string() << "\n";
}

void cmd_sweep(const RunConfig& cfg, std::ostream& out)
{
    const auto root = std::filesystem::absolute(cfg.output_dir);
    std::string text = hash_comment(cfg) + "vary,value,variant,auroc,detection_error,fpr_at_tpr,aupr_in,aupr_out\n";
    for (const double value : cfg.sweep_values) {
        std::vector<std::string> overrides{"schedule.preset="};
        std::string tag;
        if (cfg.sweep_vary == "levels") {
            if (!(value >= 1.0) || value != std::floor(value)) {
                throw ConfigError("sweep over levels needs positive integers, got " + format_double(value));
            }
            tag = std::to_string(static_cast<std::size_t>(value));
            overrides.push_back("schedule.levels=" + tag);
        } else {
            tag = format_double(value);
            overrides.push_back("schedule.sigma_high=" + tag);
        }
        overrides.push_back("output_dir=" + (root / "sweep" / (cfg.sweep_vary + "_" + tag)).string());
        const RunConfig point = with_overrides(cfg, overrides);
        out << "sweep " << cfg.sweep_vary << " = " << tag << "\n";
        cmd_train(point, out);
        cmd_norms(point, checkpoint_path(point), out);
        for (const AuxVariant v : cfg.sweep_variants) {
            const RunConfig run = with_overrides(point, {"aux.variant=" + std::string(variant_name(v))});
            cmd_fit_aux(run, std::nullopt, out);
            const OodReport r = cmd_eval(run, {}, out).pooled;
            text += cfg.sweep_vary + "," + format_double(value) + "," + std::string(variant_name(v)) + ","
                    + format_double(r.auroc) + "," + format_double(r.detection_error) + "," + format_double(r.fpr)
                    + "," + format_double(r.aupr_in) + "," + format_double(r.aupr_out) + "\n";
        }
    }
    write_text_file(cfg.output_dir / "sweep.csv", text);
    out << "wrote " << (cfg.output_dir / "sweep.csv").string() << "\n";
}

auto cmd_verify(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint,
                const std::optional<std::filesystem::path>& mixture, std::ostream& out) -> std::vector<FidelityRow>
{
    Checkpoint ckpt = load_checkpoint(checkpoint.value_or(checkpoint_path(cfg)));
    const std::string oracle_path = mixture ? mixture->string() : cfg.oracle_path;
    if (oracle_path.empty()) {
        throw ConfigError("verify needs a mixture file ('data.oracle' or --mixture)");
    }
    const GaussianMixture raw = load_oracle(oracle_path);
    if (raw.dim() != ckpt.net.dim()) {
        throw DomainError("mixture is " + std::to_string(raw.dim()) + "-dimensional but the network takes "
                          + std::to_string(ckpt.net.dim()) + " inputs");
    }
    Tensor points;
    if (!cfg.test_data.empty()) {
        points = load_dataset(cfg.test_data, cfg.base_dir).samples;
    } else {
        Rng draw = Rng(cfg.seed).split(5);
        points = sample_mixture_values(raw, 1000, draw);
    }
    if (points.cols() != raw.dim()) {
        throw DomainError("verification points have " + std::to_string(points.cols()) + " features, expected "
                          + std::to_string(raw.dim()));
    }
    GaussianMixture oracle = raw;
    if (ckpt.scaler) {
        points = ckpt.scaler->apply(points);
        oracle = affine_mixture(raw, ckpt.scaler->offset, ckpt.scaler->scale);
    }
    Rng noise = Rng(cfg.seed).split(4);
    const auto rows =
        score_fidelity(net_source(std::make_shared<const ScoreNet>(std::move(ckpt.net)), "checkpoint"), oracle, points, noise);

    std::string text = hash_comment(cfg) + "level,sigma,rms_relative_error,mean_scaled_norm,mean_scaled_norm_oracle\n";
    for (const auto& r : rows) {
        text += std::to_string(r.level) + "," + format_double(r.sigma) + "," + format_double(r.rms_relative_error)
                + "," + format_double(r.mean_scaled_norm) + "," + format_double(r.mean_scaled_norm_oracle) + "\n";
        out << "sigma " << r.sigma << ": rms relative error " << r.rms_relative_error << "\n";
    }
    write_text_file(cfg.output_dir / "verify.csv", text);
    return rows;
}

auto run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) -> int
{
    CLI::App app{"Multiscale score-matching out-of-distribution detection", "msma"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string checkpoint;
    std::string norms;
    std::string mixture;
    bool analytic = false;
    EvalRequest eval_request;
    std::string model;
    std::string inliers;
    std::vector<std::string> outliers;

    auto with_config = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "Run config (INI)")->required();
        sub->add_option("-s,--set", overrides, "Override a config key: section.key=value (repeatable)");
        return sub;
    };
    auto* train_cmd = with_config(app.add_subcommand("train", "Train the noise-conditional score network"));
    auto* norms_cmd = with_config(app.add_subcommand("norms", "Compute sigma-scaled score norms per dataset"));
    auto* ckpt_opt = norms_cmd->add_option("--checkpoint", checkpoint, "Checkpoint (default: output_dir)");
    norms_cmd->add_flag("--analytic", analytic, "Use exact mixture scores from data.oracle")->excludes(ckpt_opt);
    auto* fit_cmd = with_config(app.add_subcommand("fit-aux", "Fit the auxiliary model on training norms"));
    fit_cmd->add_option("--norms", norms, "Norms CSV (default: norms_train.csv)");
    auto* eval_cmd = with_config(app.add_subcommand("eval", "Evaluate inlier vs outlier norms"));
    eval_cmd->add_option("--model", model, "Auxiliary model file");
    eval_cmd->add_option("--inliers", inliers, "Inlier norms CSV (default: norms_test.csv)");
    eval_cmd->add_option("--outliers", outliers, "Outlier norms CSVs (default: one per data.outliers entry)");
    auto* toy_cmd = with_config(app.add_subcommand("toy", "Analytic 1-D multiscale score tables"));
    auto* sweep_cmd = with_config(app.add_subcommand("sweep", "Re-run the pipeline over a hyperparameter grid"));
    auto* verify_cmd = with_config(app.add_subcommand("verify", "Compare network scores with the mixture oracle"));
    verify_cmd->add_option("--checkpoint", checkpoint, "Checkpoint (default: output_dir)");
    verify_cmd->add_option("--mixture", mixture, "Mixture JSON (default: data.oracle)");

    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        const RunConfig cfg = load_config(config_path, overrides);
        auto opt_path = [](const std::string& p) -> std::optional<std::filesystem::path> {
            return p.empty() ? std::nullopt : std::optional<std::filesystem::path>(p);
        };
        if (train_cmd->parsed()) {
            cmd_train(cfg, out);
        } else if (norms_cmd->parsed()) {
            std::optional<std::filesystem::path> source;
            if (!analytic) {
                source = opt_path(checkpoint).value_or(checkpoint_path(cfg));
            }
            cmd_norms(cfg, source, out);
        } else if (fit_cmd->parsed()) {
            cmd_fit_aux(cfg, opt_path(norms), out);
        } else if (eval_cmd->parsed()) {
            eval_request.model = opt_path(model);
            eval_request.inliers = opt_path(inliers);
            eval_request.outliers.assign(outliers.begin(), outliers.end());
            (void)cmd_eval(cfg, eval_request, out);
        } else if (toy_cmd->parsed()) {
            cmd_toy(cfg, out);
        } else if (sweep_cmd->parsed()) {
            cmd_sweep(cfg, out);
        } else if (verify_cmd->parsed()) {
            (void)cmd_verify(cfg, opt_path(checkpoint), opt_path(mixture), out);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const DomainError& e) {
        err << "invalid input: " << e.what() << "\n";
        return exit_config;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return exit_io;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "i/o error: " << e.what() << "\n";
        return exit_io;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
    return exit_ok;
}

} // namespace msma::cli
