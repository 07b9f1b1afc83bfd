#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rkhsid/csv.hpp"
#include "rkhsid/signal.hpp"
#include "rkhsid/time.hpp"

namespace rkhsid {

// Measurement record: which input drove the system, when the output was
// sampled, and the (noisy) samples.
struct Dataset {
    Signal input;
    std::vector<double> sample_times;
    std::vector<double> outputs;
    std::optional<double> noise_sigma;

    static Dataset make(Signal input, std::vector<double> sample_times,
                        std::vector<double> outputs,
                        std::optional<double> noise_sigma = std::nullopt) {
        if (sample_times.size() != outputs.size())
            throw std::invalid_argument("dataset: one output per sample time");
        if (sample_times.empty()) throw std::invalid_argument("dataset: empty");
        for (std::size_t i = 0; i < sample_times.size(); ++i) {
            require_valid_time(input.domain(), sample_times[i], "dataset");
            if (i > 0 && !(sample_times[i] > sample_times[i - 1]))
                throw std::invalid_argument("dataset: sample times must be strictly increasing");
            if (!std::isfinite(outputs[i]))
                throw std::invalid_argument("dataset: outputs must be finite");
        }
        if (noise_sigma && (!(*noise_sigma >= 0.0) || !std::isfinite(*noise_sigma)))
            throw std::invalid_argument("dataset: noise sigma must be a finite non-negative real");
        return Dataset{std::move(input), std::move(sample_times), std::move(outputs),
                       noise_sigma};
    }

    std::size_t size() const { return sample_times.size(); }
};

inline void write_dataset_csv(const std::string& path, const Dataset& d) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < d.size(); ++i)
        rows.push_back({d.sample_times[i], d.outputs[i]});
    std::vector<std::string> comments;
    if (d.noise_sigma) comments.push_back("# noise_sigma: " + format_number(*d.noise_sigma));
    write_csv(path, {"time", "output"}, rows, comments);
}

inline Dataset read_dataset_csv(const std::string& path, Signal input) {
    const CsvTable csv = read_csv(path);
    if (csv.header != std::vector<std::string>{"time", "output"})
        throw std::invalid_argument(path + ": dataset CSV must have header time,output");
    std::vector<double> times, outputs;
    std::optional<double> sigma;
    for (const auto& c : csv.comments) {
        const std::string tag = "# noise_sigma: ";
        if (c.rfind(tag, 0) == 0) sigma = parse_number(c.substr(tag.size()), path);
    }
    for (const auto& row : csv.rows) {
        if (row.size() != 2) throw std::invalid_argument(path + ": dataset rows must be time,output");
        times.push_back(row[0]);
        outputs.push_back(row[1]);
    }
    return Dataset::make(std::move(input), std::move(times), std::move(outputs), sigma);
}

}  // namespace rkhsid
