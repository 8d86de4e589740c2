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

#include "msma/cli/config.hpp"

#include "msma/data_io.hpp"
#include "msma/errors.hpp"
#include "msma/mixture.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdlib>
#include <sstream>

namespace msma::cli {

namespace {

namespace pt = boost::property_tree;

// Every accepted key with its default; empty default means "unset".
const std::map<std::string, std::string>& defaults()
{
    static const std::map<std::string, std::string> table = {
        {"version", ""},
        {"seed", ""},
        {"output_dir", "out"},
        {"data.train", ""},
        {"data.test", ""},
        {"data.outliers", ""},
        {"data.rescale", "minmax"},
        {"data.oracle", ""},
        {"schedule.preset", ""},
        {"schedule.sigma_high", "1.0"},
        {"schedule.sigma_low", "0.01"},
        {"schedule.levels", "10"},
        {"train.steps", "10000"},
        {"train.batch_size", "128"},
        {"train.learning_rate", "0.001"},
        {"train.beta1", "0.9"},
        {"train.beta2", "0.999"},
        {"train.epsilon", "1e-8"},
        {"train.lr_schedule", "constant"},
        {"train.hidden", "128,128,128"},
        {"train.checkpoint_every", "1000"},
        {"norms.sigma_scaled", "true"},
        {"norms.batch_size", "256"},
        {"aux.variant", "gmm"},
        {"aux.k_min", "2"},
        {"aux.k_max", "20"},
        {"aux.folds", "10"},
        {"aux.restarts", "3"},
        {"aux.em_max_iterations", "500"},
        {"aux.em_tolerance", "1e-6"},
        {"aux.variance_floor", "1e-6"},
        {"aux.flow_hidden", "128,128"},
        {"aux.flow_transforms", "2"},
        {"aux.flow_epochs", "1000"},
        {"aux.flow_batch_size", "128"},
        {"aux.flow_learning_rate", "0.001"},
        {"aux.knn_k", "5"},
        {"aux.knn_aggregate", "kth"},
        {"eval.fpr_level", "0.95"},
        {"eval.layout", "standard"},
        {"toy.scenario", ""},
        {"toy.samples", "200"},
        {"sweep.vary", "levels"},
        {"sweep.values", "1,3,10,15,20"},
        {"sweep.variants", "gmm"},
    };
    return table;
}

// Keys that say where results go rather than what is computed.
auto hashed(const std::string& key) -> bool
{
    return key != "output_dir";
}

void set_entry(std::map<std::string, std::string>& entries, std::string key, std::string value)
{
    boost::algorithm::trim(key);
    boost::algorithm::trim(value);
    if (defaults().count(key) == 0) {
        throw ConfigError("unknown config key '" + key + "'");
    }
    entries[key] = value;
}

auto split_list(const std::string& s) -> std::vector<std::string>
{
    std::vector<std::string> parts;
    if (s.empty()) {
        return parts;
    }
    boost::algorithm::split(parts, s, boost::algorithm::is_any_of(","));
    for (auto& p : parts) {
        boost::algorithm::trim(p);
    }
    return parts;
}

class Reader
{
public:
    explicit Reader(const std::map<std::string, std::string>& e) : entries_(e) {}

    auto str(const std::string& key) const -> const std::string& { return entries_.at(key); }

    auto real(const std::string& key) const -> double { return to_real(key, str(key)); }

    auto count(const std::string& key) const -> std::size_t { return to_count(key, str(key)); }

    auto flag(const std::string& key) const -> bool
    {
        const std::string v = boost::algorithm::to_lower_copy(str(key));
        if (v == "true" || v == "1" || v == "yes" || v == "on") {
            return true;
        }
        if (v == "false" || v == "0" || v == "no" || v == "off") {
            return false;
        }
        throw ConfigError("'" + key + "' must be a boolean, got '" + str(key) + "'");
    }

    auto counts(const std::string& key) const -> std::vector<std::size_t>
    {
        std::vector<std::size_t> out;
        for (const auto& p : split_list(str(key))) {
            out.push_back(to_count(key, p));
        }
        return out;
    }

    auto reals(const std::string& key) const -> std::vector<double>
    {
        std::vector<double> out;
        for (const auto& p : split_list(str(key))) {
            out.push_back(to_real(key, p));
        }
        return out;
    }

    static auto to_real(const std::string& key, const std::string& v) -> double
    {
        double out = 0.0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
        if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
            throw ConfigError("'" + key + "' must be a number, got '" + v + "'");
        }
        return out;
    }

    static auto to_count(const std::string& key, const std::string& v) -> std::size_t
    {
        std::uint64_t out = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
        if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
            throw ConfigError("'" + key + "' must be a non-negative integer, got '" + v + "'");
        }
        return static_cast<std::size_t>(out);
    }

private:
    const std::map<std::string, std::string>& entries_;
};

auto derive_seed(std::uint64_t seed, std::uint64_t stream) -> std::uint64_t
{
    return Rng(seed).split(stream).next_u64();
}

void require(bool ok, const std::string& message)
{
    if (!ok) {
        throw ConfigError(message);
    }
}

auto build(std::map<std::string, std::string> entries, const std::filesystem::path& base_dir) -> RunConfig
{
    for (const auto& [key, value] : defaults()) {
        entries.try_emplace(key, value);
    }
    const Reader r(entries);
    RunConfig cfg;
    cfg.base_dir = base_dir;

    require(!r.str("version").empty(), "config is missing 'version'");
    require(r.count("version") == config_version,
            "unsupported config version " + r.str("version") + " (expected " + std::to_string(config_version) + ")");
    require(!r.str("seed").empty(), "config is missing 'seed' (unseeded runs are not allowed)");
    cfg.seed = r.count("seed");

    std::filesystem::path out = r.str("output_dir");
    if (out.is_relative()) {
        if (const char* root = std::getenv(output_root_env); root != nullptr && *root != '\0') {
            out = std::filesystem::path(root) / out;
        }
    }
    cfg.output_dir = out;

    cfg.train_data = r.str("data.train");
    cfg.test_data = r.str("data.test");
    cfg.outlier_data = split_list(r.str("data.outliers"));
    const std::string rescale = r.str("data.rescale");
    require(rescale == "minmax" || rescale == "none", "'data.rescale' must be minmax or none");
    cfg.rescale = rescale == "minmax";
    if (!r.str("data.oracle").empty()) {
        cfg.oracle_path = (base_dir / r.str("data.oracle")).lexically_normal().string();
    }

    if (!r.str("schedule.preset").empty()) {
        const SigmaSchedule preset = preset_schedule(r.str("schedule.preset"));
        cfg.sigma_high = preset.high();
        cfg.sigma_low = preset.low();
        cfg.levels = preset.levels();
    } else {
        cfg.sigma_high = r.real("schedule.sigma_high");
        cfg.sigma_low = r.real("schedule.sigma_low");
        cfg.levels = r.count("schedule.levels");
    }
    try {
        (void)cfg.schedule();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("bad noise schedule: ") + e.what());
    }

    cfg.train.steps = r.count("train.steps");
    cfg.train.batch_size = r.count("train.batch_size");
    cfg.train.adam.learning_rate = r.real("train.learning_rate");
    cfg.train.adam.beta1 = r.real("train.beta1");
    cfg.train.adam.beta2 = r.real("train.beta2");
    cfg.train.adam.epsilon = r.real("train.epsilon");
    cfg.train.checkpoint_every = r.count("train.checkpoint_every");
    cfg.train.seed = derive_seed(cfg.seed, 1);
    const std::string lr_schedule = r.str("train.lr_schedule");
    require(lr_schedule == "constant" || lr_schedule == "cosine", "'train.lr_schedule' must be constant or cosine");
    cfg.train.lr_schedule = lr_schedule == "cosine" ? LrSchedule::cosine : LrSchedule::constant;
    cfg.hidden = r.counts("train.hidden");
    require(cfg.train.steps >= 1 && cfg.train.batch_size >= 1, "train.steps and train.batch_size must be >= 1");
    require(cfg.train.adam.learning_rate > 0.0, "train.learning_rate must be > 0");
    require(!cfg.hidden.empty(), "train.hidden needs at least one layer width");

    cfg.norms.sigma_scaled = r.flag("norms.sigma_scaled");
    cfg.norms.batch_size = r.count("norms.batch_size");
    require(cfg.norms.batch_size >= 1, "norms.batch_size must be >= 1");

    cfg.aux.variant = parse_variant(r.str("aux.variant"));
    cfg.aux.seed = derive_seed(cfg.seed, 2);
    cfg.aux.gmm_k_min = r.count("aux.k_min");
    cfg.aux.gmm_k_max = r.count("aux.k_max");
    cfg.aux.gmm_folds = r.count("aux.folds");
    cfg.aux.em.restarts = r.count("aux.restarts");
    cfg.aux.em.max_iterations = r.count("aux.em_max_iterations");
    cfg.aux.em.tolerance = r.real("aux.em_tolerance");
    cfg.aux.em.variance_floor = r.real("aux.variance_floor");
    cfg.aux.flow.hidden = r.counts("aux.flow_hidden");
    cfg.aux.flow.transforms = r.count("aux.flow_transforms");
    cfg.aux.flow.epochs = r.count("aux.flow_epochs");
    cfg.aux.flow.batch_size = r.count("aux.flow_batch_size");
    cfg.aux.flow.adam.learning_rate = r.real("aux.flow_learning_rate");
    cfg.aux.knn_k = r.count("aux.knn_k");
    const std::string agg = r.str("aux.knn_aggregate");
    require(agg == "kth" || agg == "mean", "'aux.knn_aggregate' must be kth or mean");
    cfg.aux.knn_aggregate = agg == "kth" ? KnnAggregate::kth : KnnAggregate::mean;
    require(cfg.aux.gmm_k_min >= 1 && cfg.aux.gmm_k_min <= cfg.aux.gmm_k_max, "need 1 <= aux.k_min <= aux.k_max");
    require(cfg.aux.gmm_folds >= 2, "aux.folds must be >= 2");
    require(cfg.aux.em.variance_floor > 0.0, "aux.variance_floor must be > 0");

    cfg.fpr_level = r.real("eval.fpr_level");
    require(cfg.fpr_level > 0.0 && cfg.fpr_level <= 1.0, "eval.fpr_level must lie in (0, 1]");
    const std::string layout = r.str("eval.layout");
    require(layout == "standard" || layout == "likelihood", "'eval.layout' must be standard or likelihood");
    cfg.layout = layout == "standard" ? TableLayout::standard : TableLayout::likelihood;

    if (!r.str("toy.scenario").empty()) {
        cfg.toy_scenario = (base_dir / r.str("toy.scenario")).lexically_normal().string();
    }
    cfg.toy_samples = r.count("toy.samples");

    cfg.sweep_vary = r.str("sweep.vary");
    require(cfg.sweep_vary == "levels" || cfg.sweep_vary == "sigma_high", "'sweep.vary' must be levels or sigma_high");
    cfg.sweep_values = r.reals("sweep.values");
    require(!cfg.sweep_values.empty(), "sweep.values must list at least one value");
    cfg.sweep_variants.clear();
    for (const auto& v : split_list(r.str("sweep.variants"))) {
        cfg.sweep_variants.push_back(parse_variant(v));
    }

    // Referenced files must exist now rather than deep inside a command.
    std::vector<std::filesystem::path> paths;
    for (const auto* spec : {&cfg.train_data, &cfg.test_data}) {
        if (!spec->empty()) {
            for (auto& p : dataset_paths(*spec, base_dir)) {
                paths.push_back(std::move(p));
            }
        }
    }
    for (const auto& spec : cfg.outlier_data) {
        for (auto& p : dataset_paths(spec, base_dir)) {
            paths.push_back(std::move(p));
        }
    }
    if (!cfg.oracle_path.empty()) {
        paths.emplace_back(cfg.oracle_path);
    }
    if (!cfg.toy_scenario.empty()) {
        paths.emplace_back(cfg.toy_scenario);
    }
    for (const auto& p : paths) {
        require(std::filesystem::exists(p), "referenced file does not exist: " + p.string());
    }

    std::string canonical;
    for (const auto& [key, value] : entries) {
        if (hashed(key)) {
            canonical += key + "=" + value + "\n";
        }
    }
    cfg.hash = fnv1a_hex(canonical);
    cfg.entries = std::move(entries);
    return cfg;
}

void apply_overrides(std::map<std::string, std::string>& entries, const std::vector<std::string>& overrides)
{
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("override '" + o + "' is not of the form key=value");
        }
        set_entry(entries, o.substr(0, eq), o.substr(eq + 1));
    }
}

auto spec_parts(const std::string& spec) -> std::vector<std::string>
{
    std::vector<std::string> parts;
    boost::algorithm::split(parts, spec, boost::algorithm::is_any_of(":"));
    return parts;
}

auto resolve(const std::filesystem::path& base_dir, const std::string& p) -> std::filesystem::path
{
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : (base_dir / path).lexically_normal();
}

auto spec_count(const std::string& spec, const std::string& v) -> std::size_t
{
    return Reader::to_count("dataset '" + spec + "'", v);
}

} // namespace

auto parse_config(const std::string& text, const std::filesystem::path& base_dir,
                  const std::vector<std::string>& overrides) -> RunConfig
{
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("cannot parse config: ") + e.what());
    }
    std::map<std::string, std::string> entries;
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            set_entry(entries, name, node.data());
            continue;
        }
        for (const auto& [key, leaf] : node) {
            set_entry(entries, name + "." + key, leaf.data());
        }
    }
    apply_overrides(entries, overrides);
    return build(std::move(entries), base_dir);
}

auto load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) -> RunConfig
{
    if (!std::filesystem::exists(path)) {
        throw ConfigError("config file not found: " + path.string());
    }
    return parse_config(read_text_file(path), path.parent_path(), overrides);
}

auto with_overrides(const RunConfig& base, const std::vector<std::string>& overrides) -> RunConfig
{
    auto entries = base.entries;
    apply_overrides(entries, overrides);
    return build(std::move(entries), base.base_dir);
}

auto to_ini(const RunConfig& cfg) -> std::string
{
    std::ostringstream out;
    std::string section;
    for (const auto& [key, value] : cfg.entries) {
        if (key.find('.') == std::string::npos) {
            out << key << " = " << value << '\n';
        }
    }
    for (const auto& [key, value] : cfg.entries) {
        const auto dot = key.find('.');
        if (dot == std::string::npos) {
            continue;
        }
        if (key.substr(0, dot) != section) {
            section = key.substr(0, dot);
            out << "\n[" << section << "]\n";
        }
        out << key.substr(dot + 1) << " = " << value << '\n';
    }
    return out.str();
}

auto dataset_paths(const std::string& spec, const std::filesystem::path& base_dir)
    -> std::vector<std::filesystem::path>
{
    const auto parts = spec_parts(spec);
    const std::string& kind = parts.front();
    if (kind == "csv" && parts.size() == 2) {
        return {resolve(base_dir, parts[1])};
    }
    if (kind == "idx" && (parts.size() == 2 || parts.size() == 3)) {
        std::vector<std::filesystem::path> out{resolve(base_dir, parts[1])};
        if (parts.size() == 3) {
            out.push_back(resolve(base_dir, parts[2]));
        }
        return out;
    }
    if (kind == "mixture" && parts.size() == 4) {
        return {resolve(base_dir, parts[1])};
    }
    if ((kind == "uniform" || kind == "gaussian") && parts.size() == 4) {
        return {};
    }
    throw ConfigError("bad dataset spec '" + spec
                      + "' (expected csv:PATH, idx:IMAGES[:LABELS], mixture:JSON:N:SEED, uniform:N:D:SEED or "
                        "gaussian:N:D:SEED)");
}

auto load_dataset(const std::string& spec, const std::filesystem::path& base_dir) -> Dataset
{
    const auto paths = dataset_paths(spec, base_dir);
    const auto parts = spec_parts(spec);
    const std::string& kind = parts.front();
    Dataset ds;
    if (kind == "csv") {
        CsvMatrix csv = read_csv_matrix(paths[0]);
        ds.samples = std::move(csv.values);
        ds.name = paths[0].stem().string();
        ds.fingerprint = "csv:fnv1a64=" + fnv1a_hex(read_file_bytes(paths[0]));
    } else if (kind == "idx") {
        ds = paths.size() == 2 ? load_idx(paths[0], paths[1]) : load_idx(paths[0]);
    } else if (kind == "mixture") {
        const GaussianMixture gm = mixture_from_json(read_text_file(paths[0]));
        Rng rng(spec_count(spec, parts[3]));
        ds = sample_mixture(gm, spec_count(spec, parts[2]), rng);
        ds.name = paths[0].stem().string();
    } else {
        const std::size_t n = spec_count(spec, parts[1]);
        const std::size_t d = spec_count(spec, parts[2]);
        Rng rng(spec_count(spec, parts[3]));
        if (d == 0) {
            throw ConfigError("dataset '" + spec + "' needs D >= 1");
        }
        ds = kind == "uniform" ? gen_uniform_noise(n, {d}, rng) : gen_gaussian_noise(n, {d}, rng);
    }
    return ds;
}

} // namespace msma::cli
