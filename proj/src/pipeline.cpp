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

#include "msma/pipeline.hpp"

#include "msma/errors.hpp"
#include "msma/kernels.hpp"
#include "msma/log.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace msma {

namespace {

auto row_key(std::span<const double> row) -> std::uint64_t
{
    return fnv1a64({reinterpret_cast<const unsigned char*>(row.data()), row.size() * sizeof(double)});
}

auto rows_equal(std::span<const double> a, std::span<const double> b) -> bool
{
    return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

} // namespace

auto net_source(std::shared_ptr<const ScoreNet> net, std::string id) -> ScoreSource
{
    if (!net) {
        throw ContractError("net_source: null network");
    }
    ScoreSource src;
    src.schedule = net->schedule();
    src.id = std::move(id);
    src.score = [net](const Tensor& x, std::size_t level) { return net->score(x, level); };
    return src;
}

auto analytic_source(const GaussianMixture& gm, const SigmaSchedule& schedule) -> ScoreSource
{
    gm.validate();
    auto perturbed = std::make_shared<std::vector<GaussianMixture>>();
    for (const double s : schedule.sigmas) {
        perturbed->push_back(perturbed_mixture(gm, s));
    }
    ScoreSource src;
    src.schedule = schedule;
    src.id = "analytic";
    src.score = [perturbed](const Tensor& x, std::size_t level) {
        return mixture_score(perturbed->at(level), x);
    };
    return src;
}

auto compute_norms(const ScoreSource& source, const Tensor& data, const NormOptions& options) -> ScoreMatrix
{
    if (!source.score) {
        throw ContractError("compute_norms: score source has no score function");
    }
    if (options.batch_size == 0) {
        throw DomainError("compute_norms: batch size must be positive");
    }
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    const std::size_t levels = source.schedule.levels();
    if (n == 0 || levels == 0) {
        throw DomainError("compute_norms: need at least one sample and one level");
    }

    ScoreMatrix out;
    out.values = Tensor::matrix(n, levels);
    out.schedule = source.schedule;
    out.source_id = source.id;
    out.sigma_scaled = options.sigma_scaled;

    const std::size_t batches = (n + options.batch_size - 1) / options.batch_size;
    const auto tasks = static_cast<std::int64_t>(batches * levels);
    // First failing (sample, level) in row-major order, so the reported
    // failure does not depend on scheduling.
    std::size_t bad_flat = std::numeric_limits<std::size_t>::max();
    std::string bad_reason;

#pragma omp parallel for schedule(dynamic)
    for (std::int64_t t = 0; t < tasks; ++t) {
        const std::size_t level = std::size_t(t) % levels;
        const std::size_t begin = (std::size_t(t) / levels) * options.batch_size;
        const std::size_t end = std::min(n, begin + options.batch_size);
        std::vector<std::size_t> idx(end - begin);
        std::iota(idx.begin(), idx.end(), begin);
        std::size_t local_bad = std::numeric_limits<std::size_t>::max();
        std::string reason;
        std::vector<double> norms(idx.size());
        try {
            const Tensor s = source.score(data.gather_rows(idx), level);
            if (s.rows() != idx.size() || s.cols() != d) {
                throw ContractError("score source returned " + shape_string(s.shape()));
            }
            kernels::row_norms(s.data(), s.rows(), d, norms);
            for (std::size_t r = 0; r < idx.size(); ++r) {
                if (!std::isfinite(norms[r])) {
                    local_bad = (begin + r) * levels + level;
                    reason = "non-finite score";
                    break;
                }
            }
        } catch (const std::exception& e) {
            local_bad = begin * levels + level;
            reason = e.what();
        }
        if (local_bad != std::numeric_limits<std::size_t>::max()) {
#pragma omp critical(msma_norms_error)
            if (local_bad < bad_flat) {
                bad_flat = local_bad;
                bad_reason = reason;
            }
            continue;
        }
        const double sigma = source.schedule.sigmas[level];
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const double plain = norms[r];
            out.values(begin + r, level) = options.sigma_scaled ? plain * sigma : plain;
        }
    }

    if (bad_flat != std::numeric_limits<std::size_t>::max()) {
        throw NumericalError("score norm failed at sample " + std::to_string(bad_flat / levels) + ", level "
                             + std::to_string(bad_flat % levels) + " (sigma "
                             + format_double(source.schedule.sigmas[bad_flat % levels]) + "): " + bad_reason);
    }
    return out;
}

auto split_train_fit(const Dataset& train, const Dataset& test) -> SplitPolicy
{
    if (test.samples.size() == 0) {
        throw DomainError("evaluation needs a non-empty test set");
    }
    if (train.samples.size() == 0) {
        throw DomainError("score-net training needs a non-empty training set");
    }
    SplitPolicy policy{&train, &train, &test, 0};
    if (train.samples.cols() == test.samples.cols()) {
        std::unordered_multiset<std::uint64_t> keys;
        for (std::size_t r = 0; r < train.size(); ++r) {
            keys.insert(row_key(train.samples.row(r)));
        }
        std::unordered_set<std::uint64_t> seen_overlap;
        for (std::size_t r = 0; r < test.size(); ++r) {
            const auto row = test.samples.row(r);
            if (keys.count(row_key(row)) == 0) {
                continue;
            }
            // Confirm against the actual rows to rule out hash collisions.
            for (std::size_t q = 0; q < train.size(); ++q) {
                if (rows_equal(row, train.samples.row(q))) {
                    ++policy.overlapping_rows;
                    break;
                }
            }
        }
    }
    if (policy.overlapping_rows > 0) {
        warn(std::to_string(policy.overlapping_rows) + " of " + std::to_string(test.size())
             + " test samples also appear in the training set");
    }
    return policy;
}

auto sidecar_path(const std::filesystem::path& csv_path) -> std::filesystem::path
{
    auto p = csv_path;
    p += ".json";
    return p;
}

auto score_fidelity(const ScoreSource& source, const GaussianMixture& oracle, const Tensor& points, Rng& rng)
    -> std::vector<FidelityRow>
{
    oracle.validate();
    if (points.rows() == 0 || points.cols() != oracle.dim()) {
        throw DomainError("score_fidelity: points are " + shape_string(points.shape()) + " but the oracle is "
                          + std::to_string(oracle.dim()) + "-dimensional");
    }
    std::vector<FidelityRow> rows;
    for (std::size_t level = 0; level < source.schedule.levels(); ++level) {
        const double sigma = source.schedule.sigmas[level];
        Tensor noisy = points;
        for (auto& v : noisy.data()) {
            v += sigma * rng.normal();
        }
        const Tensor s = source.score(noisy, level);
        if (s.shape() != noisy.shape()) {
            throw DomainError("score_fidelity: source returned " + shape_string(s.shape()) + " for input "
                              + shape_string(noisy.shape()));
        }
        const Tensor truth = mixture_score(perturbed_mixture(oracle, sigma), noisy);
        double err = 0.0;
        double ref = 0.0;
        double norm = 0.0;
        double norm_truth = 0.0;
        for (std::size_t r = 0; r < noisy.rows(); ++r) {
            double a = 0.0;
            double b = 0.0;
            for (std::size_t j = 0; j < noisy.cols(); ++j) {
                const double diff = sigma * (s(r, j) - truth(r, j));
                err += diff * diff;
                a += s(r, j) * s(r, j);
                b += truth(r, j) * truth(r, j);
            }
            ref += sigma * sigma * b;
            norm += sigma * std::sqrt(a);
            norm_truth += sigma * std::sqrt(b);
        }
        const auto n = static_cast<double>(noisy.rows());
        FidelityRow row;
        row.level = level;
        row.sigma = sigma;
        row.rms_relative_error = ref > 0.0 ? std::sqrt(err / ref) : std::numeric_limits<double>::infinity();
        row.mean_scaled_norm = norm / n;
        row.mean_scaled_norm_oracle = norm_truth / n;
        rows.push_back(row);
    }
    return rows;
}

void save_score_matrix(const std::filesystem::path& csv_path, const ScoreMatrix& m)
{
    CsvMatrix csv;
    for (const double s : m.schedule.sigmas) {
        csv.header.push_back("sigma_" + format_double(s));
    }
    csv.values = m.values;
    csv.comments = {"config_hash=" + m.config_hash};
    write_csv_matrix(csv_path, csv);

    nlohmann::ordered_json j;
    j["format"] = "msma-score-matrix";
    j["version"] = 1;
    j["rows"] = m.values.rows();
    j["sigmas"] = m.schedule.sigmas;
    j["source_id"] = m.source_id;
    j["dataset_id"] = m.dataset_id;
    j["sigma_scaled"] = m.sigma_scaled;
    j["config_hash"] = m.config_hash;
    write_text_file(sidecar_path(csv_path), j.dump(2) + "\n");
}

auto load_score_matrix(const std::filesystem::path& csv_path) -> ScoreMatrix
{
    ScoreMatrix m;
    CsvMatrix csv = read_csv_matrix(csv_path);
    try {
        const auto j = nlohmann::json::parse(read_text_file(sidecar_path(csv_path)));
        m.schedule.sigmas = j.at("sigmas").get<std::vector<double>>();
        m.source_id = j.at("source_id").get<std::string>();
        m.dataset_id = j.at("dataset_id").get<std::string>();
        m.sigma_scaled = j.at("sigma_scaled").get<bool>();
        m.config_hash = j.value("config_hash", "");
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad score-matrix sidecar for '" + csv_path.string() + "': " + e.what());
    }
    if (csv.header.size() != m.schedule.levels()) {
        throw IoError("score matrix '" + csv_path.string() + "' has " + std::to_string(csv.header.size())
                      + " columns but its sidecar lists " + std::to_string(m.schedule.levels()) + " sigmas");
    }
    for (std::size_t j = 0; j < csv.header.size(); ++j) {
        if (csv.header[j] != "sigma_" + format_double(m.schedule.sigmas[j])) {
            throw IoError("score matrix column '" + csv.header[j] + "' disagrees with the sidecar schedule");
        }
    }
    for (const double v : csv.values.data()) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw IoError("score matrix '" + csv_path.string() + "' holds a negative or non-finite entry");
        }
    }
    m.values = std::move(csv.values);
    return m;
}

} // namespace msma
