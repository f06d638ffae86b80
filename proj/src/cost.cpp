#include "sinefm/cost.hpp"

#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace sinefm {

std::string CostTable::summary() const {
    std::ostringstream out;
    out << "cost-table v" << version << ": conv-mac=" << conv_mac
        << " transform/elem=" << transform_per_elem << " norm/elem=" << norm_per_elem
        << " relu/elem=" << relu_per_elem << " pool/up/add=0";
    return out.str();
}

std::int64_t conv_flops(std::int64_t c_in, std::int64_t k, std::int64_t h_out,
                        std::int64_t w_out, std::int64_t c_out) {
    if (c_in < 1 || k < 1 || h_out < 1 || w_out < 1 || c_out < 1) {
        throw ArgumentError("conv_flops arguments must be positive");
    }
    return c_in * k * k * h_out * w_out * c_out;
}

std::int64_t sinefm_flops(const SineFMConfig& config, int h_out, int w_out) {
    const ChannelPlan plan = channel_plan(config.c_out, config.c_s, config.fanout);
    const CostTable table;
    const std::int64_t hw = static_cast<std::int64_t>(h_out) * w_out;
    std::int64_t total =
        conv_flops(config.c_in, config.kernel, h_out, w_out, config.c_s) * table.conv_mac;
    if (plan.combine_out > 0) {
        total += plan.combine_in * hw * table.transform_per_elem; // generation
        total += plan.combine_in * hw * table.norm_per_elem;      // normalization
        total += conv_flops(plan.combine_in, 1, h_out, w_out, plan.combine_out) * table.conv_mac;
    }
    return total;
}

std::int64_t sinefm_params(const SineFMConfig& config) {
    const ChannelPlan plan = channel_plan(config.c_out, config.c_s, config.fanout);
    return static_cast<std::int64_t>(config.c_s) * config.c_in * config.kernel * config.kernel +
           static_cast<std::int64_t>(plan.combine_out) * plan.combine_in;
}

CostReport model_cost(const ArchDescriptor& desc, int input_h, int input_w) {
    ArchDescriptor sized = desc;
    sized.h = input_h;
    sized.w = input_w;
    const std::vector<Shape> shapes = trace_shapes(sized);

    CostReport report;
    report.input_h = input_h;
    report.input_w = input_w;

    Shape in{1, sized.c, sized.h, sized.w};
    std::vector<Shape> res_inputs; // shape entering each open resbegin
    for (std::size_t i = 0; i < sized.layers.size(); ++i) {
        const LayerSpec& layer = sized.layers[i];
        const Shape out = shapes[i];
        CostRow row;
        std::ostringstream name;
        name << i << ":";
        if (const auto* s = std::get_if<ConvSpec>(&layer)) {
            name << "conv " << s->c_in << "->" << s->c_out << " k" << s->kernel;
            row.params = static_cast<std::int64_t>(s->c_out) * s->c_in * s->kernel * s->kernel;
            row.flops = conv_flops(s->c_in, s->kernel, out.h, out.w, s->c_out);
        } else if (const auto* s = std::get_if<SineFMConfig>(&layer)) {
            name << "sinefm " << s->c_in << "->" << s->c_out << " cs" << s->c_s << " k" << s->kernel
                 << " f" << s->fanout;
            row.params = sinefm_params(*s);
            row.flops = sinefm_flops(*s, out.h, out.w);
        } else if (const auto* s = std::get_if<DenseSpec>(&layer)) {
            name << "dense " << s->in << "->" << s->classes;
            row.params = static_cast<std::int64_t>(s->classes) * s->in + s->classes;
            row.flops = static_cast<std::int64_t>(s->classes) * s->in;
        } else if (const auto* s = std::get_if<SegHeadSpec>(&layer)) {
            name << "seghead " << s->in << "->" << s->classes;
            row.params = static_cast<std::int64_t>(s->classes) * s->in + s->classes;
            row.flops = conv_flops(s->in, 1, out.h, out.w, s->classes);
        } else if (const auto* s = std::get_if<ResBeginSpec>(&layer)) {
            if (s->projection) {
                name << "resbegin proj " << in.c << "->" << s->c_out;
                const int ph = (in.h - 1) / s->stride + 1;
                const int pw = (in.w - 1) / s->stride + 1;
                row.params = static_cast<std::int64_t>(s->c_out) * in.c;
                row.flops = conv_flops(in.c, 1, ph, pw, s->c_out);
            } else {
                name << "resbegin";
            }
            res_inputs.push_back(in);
        } else if (std::holds_alternative<ResEndSpec>(layer)) {
            name << "resend";
            res_inputs.pop_back();
        } else if (std::holds_alternative<PoolSpec>(layer)) {
            name << "pool";
        } else if (std::holds_alternative<UpsampleSpec>(layer)) {
            name << "up";
        } else if (std::holds_alternative<ReluSpec>(layer)) {
            name << "relu";
        } else {
            name << "gap";
        }
        row.layer = name.str();
        report.total_params += row.params;
        report.total_flops += row.flops;
        report.rows.push_back(std::move(row));
        in = out;
    }
    return report;
}

CostRatios compare(const CostReport& a, const CostReport& b) {
    if (a.input_h != b.input_h || a.input_w != b.input_w) {
        throw ArgumentError("compare requires reports at the same input size");
    }
    CostRatios r;
    r.params = static_cast<double>(b.total_params) / static_cast<double>(a.total_params);
    r.flops = static_cast<double>(b.total_flops) / static_cast<double>(a.total_flops);
    return r;
}

std::string cost_to_text(const CostReport& report) {
    std::ostringstream out;
    out << report.table.summary() << "\n";
    out << "input " << report.input_h << "x" << report.input_w << "\n";
    std::size_t width = 5;
    for (const auto& row : report.rows) width = std::max(width, row.layer.size());
    out << std::left << std::setw(static_cast<int>(width) + 2) << "layer" << std::right
        << std::setw(14) << "params" << std::setw(18) << "flops" << "\n";
    for (const auto& row : report.rows) {
        out << std::left << std::setw(static_cast<int>(width) + 2) << row.layer << std::right
            << std::setw(14) << row.params << std::setw(18) << row.flops << "\n";
    }
    out << std::left << std::setw(static_cast<int>(width) + 2) << "total" << std::right
        << std::setw(14) << report.total_params << std::setw(18) << report.total_flops << "\n";
    return out.str();
}

std::string cost_to_csv(const CostReport& report) {
    std::ostringstream out;
    out << "# " << report.table.summary() << " input=" << report.input_h << "x" << report.input_w
        << "\n";
    out << "layer,params,flops\n";
    for (const auto& row : report.rows) {
        out << row.layer << "," << row.params << "," << row.flops << "\n";
    }
    out << "total," << report.total_params << "," << report.total_flops << "\n";
    return out.str();
}

std::string cost_to_json(const CostReport& report) {
    nlohmann::json j;
    j["cost_table"] = {{"version", report.table.version},
                       {"conv_mac", report.table.conv_mac},
                       {"transform_per_elem", report.table.transform_per_elem},
                       {"norm_per_elem", report.table.norm_per_elem},
                       {"relu_per_elem", report.table.relu_per_elem}};
    j["input"] = {{"h", report.input_h}, {"w", report.input_w}};
    j["layers"] = nlohmann::json::array();
    for (const auto& row : report.rows) {
        j["layers"].push_back({{"layer", row.layer}, {"params", row.params}, {"flops", row.flops}});
    }
    j["total"] = {{"params", report.total_params}, {"flops", report.total_flops}};
    return j.dump(2);
}

} // namespace sinefm
