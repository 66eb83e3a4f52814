#pragma once

#include <optional>
#include <string>
#include <vector>

namespace fgsf::pbdetect {

// Logged Tr(F) readings for one network; steps strictly increasing.
struct TraceSeries {
    std::vector<double> steps;
    std::vector<double> values;

    size_t size() const { return values.size(); }
    void validate() const;
};

struct SavGolSpec {
    int window = 51;   // odd, >= 5
    int polyorder = 3; // >= 1, < window
    int deriv = 0;     // 0 or 1

    void validate() const;
};

// Least-squares polynomial convolution weights over the centered window:
// row `deriv` of the pseudoinverse of the window Vandermonde matrix, times
// deriv!. Sample-spacing scaling happens at application time.
std::vector<double> savgol_coefficients(const SavGolSpec& spec);

// Smoothing (deriv 0) with mirror-padded edges; output aligned to input.
std::vector<double> smooth_series(const std::vector<double>& values,
                                  const SavGolSpec& spec);

// Centered first-derivative convolution, mirror padding, divided by the mean
// sample spacing. Exact on polynomials of degree <= polyorder.
std::vector<double> differentiate_series(const TraceSeries& series,
                                         const SavGolSpec& spec);

struct StepInterval {
    double begin_step = 0.0;
    double end_step = 0.0;
    long begin_index = 0;
    long end_index = 0;
};

struct PhaseThresholds {
    double up = 0.05;        // fraction of max |dTr|
    double down = 0.05;
    int min_len = 10;        // samples of sustained growth/decline
    double prominence = 2.0; // peak >= prominence * plateau
};

struct PhaseReport {
    std::optional<StepInterval> memorization;   // ends at the peak
    std::optional<StepInterval> reorganization; // begins at the peak
    long peak_index = 0;
    double peak_step = 0.0;
    double peak_value = 0.0;
    double plateau_value = 0.0; // mean of the final 10% of the smoothed series
    bool pb_detected = false;
};

// Two-phase pattern detector: a sustained rise in the smoothed trace ending
// at its global peak (memorization) followed by a sustained decline
// (reorganization), with the peak prominent against the final plateau.
// Thresholds are relative to max |dTr|, so detection is scale-equivariant.
PhaseReport classify_phases(const TraceSeries& series, const SavGolSpec& smooth_spec,
                            const PhaseThresholds& thresholds);

std::string report_to_text(const PhaseReport& r, const std::string& label);

} // namespace fgsf::pbdetect
