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

#include "msma/aux_model.hpp"

#include "msma/data_io.hpp"
#include "msma/errors.hpp"
#include "msma/log.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace msma {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int model_format_version = 1;

auto column_means(const Tensor& x) -> std::vector<double>
{
    std::vector<double> mean(x.cols(), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            mean[j] += x(r, j);
        }
    }
    for (auto& m : mean) {
        m /= double(x.rows());
    }
    return mean;
}

auto inverse_stddevs(const Tensor& x, const std::vector<double>& mean) -> std::vector<double>
{
    std::vector<double> var(x.cols(), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double d = x(r, j) - mean[j];
            var[j] += d * d;
        }
    }
    std::vector<double> scale(x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) {
        const double sd = std::sqrt(var[j] / double(x.rows()));
        scale[j] = sd > 0.0 ? 1.0 / sd : 1.0;
    }
    return scale;
}

auto tensor_from_json(const json& j) -> Tensor
{
    const auto shape = j.at("shape").get<Shape>();
    return Tensor(shape, j.at("data").get<std::vector<double>>());
}

auto tensor_to_json(const Tensor& t) -> ordered_json
{
    ordered_json j;
    j["shape"] = t.shape();
    j["data"] = t.values();
    return j;
}

} // namespace

auto variant_name(AuxVariant v) -> std::string_view
{
    switch (v) {
    case AuxVariant::gmm:
        return "gmm";
    case AuxVariant::flow:
        return "flow";
    case AuxVariant::knn:
        return "knn";
    }
    return "?";
}

auto parse_variant(std::string_view name) -> AuxVariant
{
    if (name == "gmm") {
        return AuxVariant::gmm;
    }
    if (name == "flow") {
        return AuxVariant::flow;
    }
    if (name == "knn") {
        return AuxVariant::knn;
    }
    throw ConfigError("unknown auxiliary model '" + std::string(name) + "' (expected gmm, flow or knn)");
}

namespace {

// Lexicographic row order, so seeded fits do not depend on how the rows
// arrive.
auto canonical_rows(const Tensor& x) -> Tensor
{
    std::vector<std::size_t> idx(x.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const auto ra = x.row(a);
        const auto rb = x.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });
    return x.gather_rows(idx);
}

} // namespace

auto Preprocessing::apply(const Tensor& x) const -> Tensor
{
    if (x.cols() != mean.size()) {
        throw DomainError("score-norm rows have " + std::to_string(x.cols()) + " columns, model expects "
                          + std::to_string(mean.size()));
    }
    Tensor out = x;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            out(r, j) = (x(r, j) - mean[j]) * scale[j];
        }
    }
    return out;
}

auto Preprocessing::log_jacobian() const -> double
{
    double s = 0.0;
    for (const double v : scale) {
        s += std::log(v);
    }
    return s;
}

auto AuxModel::fit(const Tensor& norms, const AuxOptions& options) -> AuxModel
{
    if (norms.size() == 0 || !norms.all_finite()) {
        throw DomainError("auxiliary model needs a non-empty, finite score-norm matrix");
    }
    AuxModel m;
    m.variant_ = options.variant;
    const std::size_t d = norms.cols();
    Rng root(options.seed);

    switch (options.variant) {
    case AuxVariant::gmm: {
        const Tensor rows = canonical_rows(norms);
        m.prep_ = {column_means(rows), std::vector<double>(d, 1.0)};
        const Tensor x = m.prep_.apply(rows);
        std::size_t k = options.gmm_k_min;
        if (options.gmm_k_min != options.gmm_k_max) {
            Rng sel_rng = root.split(1);
            m.selection_ = select_components(x, options.gmm_k_min, options.gmm_k_max, options.gmm_folds, sel_rng,
                                             options.em);
            k = m.selection_->selected_k;
        }
        Rng fit_rng = root.split(2);
        EmResult em = fit_em(x, k, fit_rng, options.em);
        if (em.floored) {
            warn("GMM: a component variance fell below " + format_double(options.em.variance_floor)
                 + " and was clamped");
        }
        m.gmm_ = std::move(em.model);
        break;
    }
    case AuxVariant::flow: {
        const Tensor rows = canonical_rows(norms);
        const auto mean = column_means(rows);
        m.prep_ = {mean, inverse_stddevs(rows, mean)};
        m.flow_options_ = options.flow;
        m.flow_options_.seed = root.split(3).next_u64();
        FlowFit fit = fit_maf(m.prep_.apply(rows), m.flow_options_);
        m.flow_ = std::move(fit.flow);
        m.flow_loss_ = std::move(fit.epoch_loss);
        break;
    }
    case AuxVariant::knn: {
        if (options.knn_k == 0 || options.knn_k >= norms.rows()) {
            throw DomainError("k-NN needs 1 <= k < N (k = " + std::to_string(options.knn_k)
                              + ", N = " + std::to_string(norms.rows()) + ")");
        }
        m.prep_ = {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
        m.tree_ = KdTree(norms);
        m.knn_k_ = options.knn_k;
        m.knn_aggregate_ = options.knn_aggregate;
        break;
    }
    }
    return m;
}

auto AuxModel::gmm() const -> const Gmm&
{
    if (variant_ != AuxVariant::gmm) {
        throw ContractError("AuxModel::gmm on a " + std::string(variant_name(variant_)) + " model");
    }
    return gmm_;
}

auto AuxModel::flow() const -> const MafFlow&
{
    if (variant_ != AuxVariant::flow) {
        throw ContractError("AuxModel::flow on a " + std::string(variant_name(variant_)) + " model");
    }
    return flow_;
}

auto AuxModel::knn_score(std::span<const double> row, std::optional<std::size_t> exclude) const -> double
{
    const auto nn = tree_.query(row, knn_k_, exclude);
    if (knn_aggregate_ == KnnAggregate::kth) {
        return -nn.back().distance;
    }
    double s = 0.0;
    for (const auto& n : nn) {
        s += n.distance;
    }
    return -s / double(nn.size());
}

auto AuxModel::inlier_score(std::span<const double> row) const -> double
{
    if (row.size() != dim()) {
        throw DomainError("score-norm row has " + std::to_string(row.size()) + " entries, model expects "
                          + std::to_string(dim()));
    }
    const Tensor one({1, row.size()}, std::vector<double>(row.begin(), row.end()));
    return inlier_scores(one).front();
}

auto AuxModel::inlier_scores(const Tensor& rows) const -> std::vector<double>
{
    if (rows.cols() != dim() || dim() == 0) {
        throw DomainError("score-norm rows have " + std::to_string(rows.cols()) + " columns, model expects "
                          + std::to_string(dim()));
    }
    const std::size_t n = rows.rows();
    std::vector<double> out(n);
    switch (variant_) {
    case AuxVariant::gmm: {
        const Tensor x = prep_.apply(rows);
#pragma omp parallel for schedule(static)
        for (std::int64_t r = 0; r < std::int64_t(n); ++r) {
            out[std::size_t(r)] = gmm_.log_density(x.row(std::size_t(r)));
        }
        break;
    }
    case AuxVariant::flow: {
        out = flow_.log_density(prep_.apply(rows));
        const double lj = prep_.log_jacobian();
        for (auto& v : out) {
            v += lj;
        }
        break;
    }
    case AuxVariant::knn: {
#pragma omp parallel for schedule(static)
        for (std::int64_t r = 0; r < std::int64_t(n); ++r) {
            out[std::size_t(r)] = knn_score(rows.row(std::size_t(r)), std::nullopt);
        }
        break;
    }
    }
    return out;
}

auto AuxModel::fit_set_scores() const -> std::vector<double>
{
    if (variant_ != AuxVariant::knn) {
        throw ContractError("fit_set_scores is only defined for k-NN models");
    }
    const Tensor& pts = tree_.points();
    std::vector<double> out(pts.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < std::int64_t(pts.rows()); ++r) {
        out[std::size_t(r)] = knn_score(pts.row(std::size_t(r)), std::size_t(r));
    }
    return out;
}

auto AuxModel::to_json(const std::string& config_hash) const -> std::string
{
    ordered_json j;
    j["format"] = "msma-aux-model";
    j["version"] = model_format_version;
    j["variant"] = std::string(variant_name(variant_));
    j["config_hash"] = config_hash;
    j["preprocessing"] = {{"mean", prep_.mean}, {"scale", prep_.scale}};
    switch (variant_) {
    case AuxVariant::gmm: {
        ordered_json g;
        g["weights"] = gmm_.weights();
        g["means"] = gmm_.means();
        g["covariances"] = gmm_.covariances();
        if (selection_) {
            g["selected_k"] = selection_->selected_k;
        }
        j["gmm"] = g;
        break;
    }
    case AuxVariant::flow: {
        ordered_json f;
        f["hidden"] = flow_options_.hidden;
        f["transforms"] = flow_options_.transforms;
        ordered_json params = ordered_json::array();
        for (const Tensor* p : flow_.parameters()) {
            params.push_back(tensor_to_json(*p));
        }
        f["parameters"] = params;
        j["flow"] = f;
        break;
    }
    case AuxVariant::knn: {
        ordered_json k;
        k["k"] = knn_k_;
        k["aggregate"] = knn_aggregate_ == KnnAggregate::kth ? "kth" : "mean";
        k["points"] = tensor_to_json(tree_.points());
        j["knn"] = k;
        break;
    }
    }
    return j.dump(1) + "\n";
}

auto AuxModel::from_json(const std::string& text) -> AuxModel
{
    AuxModel m;
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != "msma-aux-model") {
            throw IoError("not an auxiliary model file");
        }
        if (const int v = j.at("version").get<int>(); v != model_format_version) {
            throw IoError("unsupported auxiliary model version " + std::to_string(v));
        }
        m.variant_ = parse_variant(j.at("variant").get<std::string>());
        m.prep_.mean = j.at("preprocessing").at("mean").get<std::vector<double>>();
        m.prep_.scale = j.at("preprocessing").at("scale").get<std::vector<double>>();
        if (m.prep_.mean.size() != m.prep_.scale.size() || m.prep_.mean.empty()) {
            throw IoError("auxiliary model preprocessing is malformed");
        }
        switch (m.variant_) {
        case AuxVariant::gmm: {
            const auto& g = j.at("gmm");
            m.gmm_ = Gmm(g.at("weights").get<std::vector<double>>(),
                         g.at("means").get<std::vector<std::vector<double>>>(),
                         g.at("covariances").get<std::vector<std::vector<double>>>());
            break;
        }
        case AuxVariant::flow: {
            const auto& f = j.at("flow");
            m.flow_options_.hidden = f.at("hidden").get<std::vector<std::size_t>>();
            m.flow_options_.transforms = f.at("transforms").get<std::size_t>();
            Rng unused(0);
            m.flow_ = MafFlow(m.prep_.mean.size(), m.flow_options_, unused);
            const auto& params = f.at("parameters");
            auto slots = m.flow_.parameters();
            if (params.size() != slots.size()) {
                throw IoError("flow parameter count does not match its architecture");
            }
            for (std::size_t i = 0; i < slots.size(); ++i) {
                Tensor t = tensor_from_json(params[i]);
                if (t.shape() != slots[i]->shape()) {
                    throw IoError("flow parameter " + std::to_string(i) + " has the wrong shape");
                }
                *slots[i] = std::move(t);
            }
            break;
        }
        case AuxVariant::knn: {
            const auto& k = j.at("knn");
            m.knn_k_ = k.at("k").get<std::size_t>();
            const auto agg = k.at("aggregate").get<std::string>();
            if (agg != "kth" && agg != "mean") {
                throw IoError("unknown k-NN aggregate '" + agg + "'");
            }
            m.knn_aggregate_ = agg == "kth" ? KnnAggregate::kth : KnnAggregate::mean;
            m.tree_ = KdTree(tensor_from_json(k.at("points")));
            if (m.tree_.dim() != m.prep_.mean.size()) {
                throw IoError("k-NN points do not match the model dimension");
            }
            break;
        }
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed auxiliary model file: ") + e.what());
    } catch (const DomainError& e) {
        throw IoError(std::string("invalid auxiliary model: ") + e.what());
    }
    return m;
}

void save_aux_model(const std::filesystem::path& path, const AuxModel& model, const std::string& config_hash)
{
    write_text_file(path, model.to_json(config_hash));
}

auto load_aux_model(const std::filesystem::path& path) -> AuxModel
{
    return AuxModel::from_json(read_text_file(path));
}

void write_gmm_trace(const std::filesystem::path& path, const GmmSelection& selection,
                     const std::string& config_hash)
{
    if (selection.trace.empty()) {
        throw DomainError("empty GMM selection trace");
    }
    CsvMatrix csv;
    csv.comments = {"config_hash=" + config_hash, "selected_k=" + std::to_string(selection.selected_k)};
    csv.header = {"k", "mean_heldout_loglik"};
    const std::size_t folds = selection.trace.front().fold_log_likelihood.size();
    for (std::size_t f = 0; f < folds; ++f) {
        csv.header.push_back("fold_" + std::to_string(f));
    }
    csv.values = Tensor::matrix(selection.trace.size(), 2 + folds);
    for (std::size_t r = 0; r < selection.trace.size(); ++r) {
        const auto& row = selection.trace[r];
        csv.values(r, 0) = double(row.k);
        csv.values(r, 1) = row.mean_heldout_log_likelihood;
        for (std::size_t f = 0; f < folds; ++f) {
            csv.values(r, 2 + f) = row.fold_log_likelihood[f];
        }
    }
    write_csv_matrix(path, csv);
}

} // namespace msma
