#pragma once

// Analytical FLOP and learnable-parameter accounting. One multiply-add
// counts as one FLOP; the remaining per-element constants are declared in
// CostTable, versioned, and printed in every report.

#include <cstdint>
#include <string>
#include <vector>

#include "sinefm/network.hpp"

namespace sinefm {

struct CostTable {
    int version = 1;
    std::int64_t conv_mac = 1;           // one multiply-add per filter tap
    std::int64_t transform_per_elem = 1; // one transform evaluation
    std::int64_t norm_per_elem = 4;      // mean, center, square-sum, divide
    std::int64_t relu_per_elem = 0;      // pools, upsampling, adds also 0
    std::string summary() const;
};

struct CostRow {
    std::string layer;
    std::int64_t params = 0;
    std::int64_t flops = 0;
};

struct CostReport {
    std::vector<CostRow> rows;
    std::int64_t total_params = 0;
    std::int64_t total_flops = 0;
    int input_h = 0;
    int input_w = 0;
    CostTable table;
};

std::int64_t conv_flops(std::int64_t c_in, std::int64_t k, std::int64_t h_out,
                        std::int64_t w_out, std::int64_t c_out);

std::int64_t sinefm_flops(const SineFMConfig& config, int h_out, int w_out);
std::int64_t sinefm_params(const SineFMConfig& config);

CostReport model_cost(const ArchDescriptor& desc, int input_h, int input_w);

struct CostRatios {
    double params = 0.0;
    double flops = 0.0;
};

// Totals of b over totals of a; the reports must share an input size.
CostRatios compare(const CostReport& a, const CostReport& b);

std::string cost_to_text(const CostReport& report);
std::string cost_to_csv(const CostReport& report);
std::string cost_to_json(const CostReport& report);

} // namespace sinefm
