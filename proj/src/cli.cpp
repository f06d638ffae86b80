#include "sinefm/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sinefm/codec.hpp"
#include "sinefm/cost.hpp"
#include "sinefm/gradcheck.hpp"
#include "sinefm/network.hpp"
#include "sinefm/trainer.hpp"

namespace sinefm::cli {

namespace {

// One master --seed fans out into per-purpose sub-seeds.
struct SeedPlan {
    std::uint64_t init;
    std::uint64_t transforms;
    std::uint64_t data;
    std::uint64_t shuffle;
    explicit SeedPlan(std::uint64_t master)
        : init(substream(master, 0)), transforms(substream(master, 1)),
          data(substream(master, 2)), shuffle(substream(master, 3)) {}
};

ArchDescriptor resolve_arch(const std::string& arch, int h, int w, int classes) {
    if (auto builtin = builtin_arch(arch, h, w, classes)) {
        return *builtin;
    }
    return load_descriptor(arch);
}

TransformFamily resolve_family(const std::string& name) {
    const auto family = family_from_name(name);
    if (!family) {
        throw ValidationError("unknown transform family '" + name + "'");
    }
    return *family;
}

void write_output(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(path);
    if (!file) {
        throw FormatError("cannot write output file: " + path);
    }
    file << text;
}

std::vector<std::string> split_csv(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct TrainFlags {
    std::string arch = "tiny-vgg";
    std::string data = "synth-class";
    std::string out_pack;
    std::string history_path;
    std::string family = "sinusoidal";
    std::uint64_t seed = 0;
    int epochs = 20;
    int batch = 32;
    double lr = 6e-4;
    double wd = 1e-2;
    double noise = -1.0;
    std::string optim = "adamw";
    int c_s = 16;
    int fanout = 5;
    int train_count = 0;
    int test_count = 0;
    int threads = 1;
    bool standard = false;
    bool no_augment = false;
    std::string data_path;
};

DatasetSpec dataset_spec_from_flags(const std::string& kind_name, const TrainFlags& flags,
                                    const SeedPlan& seeds) {
    DatasetSpec spec;
    spec.kind = dataset_kind_from_name(kind_name);
    spec.seed = seeds.data;
    spec.path = flags.data_path;
    if (flags.train_count > 0) spec.train_count = flags.train_count;
    if (flags.test_count > 0) spec.test_count = flags.test_count;
    if (flags.noise >= 0.0) spec.noise = flags.noise;
    if (spec.kind == DatasetKind::SynthClass) {
        if (flags.train_count <= 0) spec.train_count = 512;
        if (flags.test_count <= 0) spec.test_count = 128;
    } else if (spec.kind == DatasetKind::SynthSeg) {
        if (flags.train_count <= 0) spec.train_count = 192;
        if (flags.test_count <= 0) spec.test_count = 48;
        if (flags.noise < 0.0) spec.noise = 0.1;
    }
    return spec;
}

OptimConfig optim_from_flags(const TrainFlags& flags) {
    OptimConfig optim;
    if (flags.optim == "adamw") {
        optim.algorithm = OptimAlgorithm::AdamW;
    } else if (flags.optim == "sgd") {
        optim.algorithm = OptimAlgorithm::SgdMomentum;
    } else {
        throw ValidationError("unknown optimizer '" + flags.optim + "' (adamw or sgd)");
    }
    optim.lr = flags.lr;
    optim.weight_decay = flags.wd;
    optim.epochs = flags.epochs;
    optim.batch = flags.batch;
    optim.augment = !flags.no_augment;
    return optim;
}

void add_train_like_flags(CLI::App* cmd, TrainFlags& flags) {
    cmd->add_option("--arch", flags.arch, "builtin name or descriptor file");
    cmd->add_option("--data", flags.data, "synth-class | synth-seg | image-folder");
    cmd->add_option("--data-path", flags.data_path, "directory for image-folder data");
    cmd->add_option("--seed", flags.seed, "master seed; all randomness derives from it");
    cmd->add_option("--epochs", flags.epochs);
    cmd->add_option("--batch", flags.batch);
    cmd->add_option("--lr", flags.lr, "initial learning rate (cosine-annealed to zero)");
    cmd->add_option("--wd", flags.wd, "AdamW weight decay");
    cmd->add_option("--optim", flags.optim, "adamw | sgd");
    cmd->add_option("--family", flags.family);
    cmd->add_option("--cs", flags.c_s, "seed channels for conversion");
    cmd->add_option("--fanout", flags.fanout);
    cmd->add_option("--train-count", flags.train_count);
    cmd->add_option("--test-count", flags.test_count);
    cmd->add_option("--noise", flags.noise);
    cmd->add_flag("--standard", flags.standard, "train the architecture as-is, no conversion");
    cmd->add_flag("--no-augment", flags.no_augment);
    cmd->add_option("--threads", flags.threads, "parallel evaluation threads");
}

int run_train(const TrainFlags& flags, std::ostream& out, std::ostream& err) {
    const SeedPlan seeds(flags.seed);
    const DatasetSpec data_spec = dataset_spec_from_flags(flags.data, flags, seeds);
    const DatasetPair<float> data = make_dataset<float>(data_spec);
    ArchDescriptor arch = resolve_arch(flags.arch, data.train.height(), data.train.width(),
                                       data.train.classes);
    if (!flags.standard) {
        arch = convert_to_sinefm(arch, flags.c_s, flags.fanout, resolve_family(flags.family),
                                 seeds.transforms);
    }
    Model<float> model = build<float>(arch, seeds.init);
    const History history = train(model, data.train, optim_from_flags(flags), seeds.shuffle, &err);
    const EvalResult train_eval = evaluate(model, data.train, flags.threads);
    const EvalResult test_eval = evaluate(model, data.test, flags.threads);
    err << "train " << metrics_to_string(train_eval.metrics) << "\n";
    err << "test  " << metrics_to_string(test_eval.metrics) << "\n";
    if (!flags.out_pack.empty()) {
        save_pack(model, flags.out_pack);
        err << "wrote SeedPack to " << flags.out_pack << " ("
            << pack_size_bytes(model.descriptor) << " bytes)\n";
    }
    write_output(history.to_csv(), flags.history_path, out);
    return 0;
}

int run_eval(const std::string& pack_path, const TrainFlags& flags, std::ostream& out) {
    const SeedPlan seeds(flags.seed);
    const Model<float> model = load_pack<float>(pack_path);
    const DatasetSpec data_spec = dataset_spec_from_flags(flags.data, flags, seeds);
    const DatasetPair<float> data = make_dataset<float>(data_spec);
    const EvalResult result = evaluate(model, data.test, flags.threads);
    out << metrics_to_string(result.metrics) << "\n";
    return 0;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"SineFM: seed-feature-map CNN layers, cost model, and SeedPack codec"};
    app.require_subcommand(1);

    // train
    TrainFlags train_flags;
    auto* train_cmd = app.add_subcommand("train", "train a model and write a SeedPack");
    add_train_like_flags(train_cmd, train_flags);
    train_cmd->add_option("--out", train_flags.out_pack, "SeedPack output path");
    train_cmd->add_option("--history", train_flags.history_path,
                          "write per-epoch CSV here instead of stdout");

    // eval
    TrainFlags eval_flags;
    std::string eval_pack;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a SeedPack on a dataset");
    eval_cmd->add_option("--pack", eval_pack, "SeedPack file")->required();
    add_train_like_flags(eval_cmd, eval_flags);

    // flops
    std::string flops_arch = "tiny-vgg";
    std::vector<int> flops_hw = {32, 32};
    bool flops_compare = false, flops_json = false, flops_csv = false;
    std::string flops_family = "sinusoidal";
    std::uint64_t flops_seed = 0;
    int flops_cs = 16, flops_fanout = 5;
    auto* flops_cmd = app.add_subcommand("flops", "analytical FLOP/parameter report");
    flops_cmd->add_option("--arch", flops_arch);
    flops_cmd->add_option("--hw", flops_hw, "input height width")->expected(2);
    flops_cmd->add_flag("--compare-standard", flops_compare,
                        "emit SineFM vs standard-conv comparison with ratio row");
    flops_cmd->add_flag("--json", flops_json);
    flops_cmd->add_flag("--csv", flops_csv);
    flops_cmd->add_option("--family", flops_family);
    flops_cmd->add_option("--seed", flops_seed);
    flops_cmd->add_option("--cs", flops_cs);
    flops_cmd->add_option("--fanout", flops_fanout);

    // pack
    std::string pack_arch, pack_out;
    std::uint64_t pack_seed = 0;
    auto* pack_cmd = app.add_subcommand("pack", "build a seeded model and write its SeedPack");
    pack_cmd->add_option("--arch", pack_arch)->required();
    pack_cmd->add_option("--out", pack_out)->required();
    pack_cmd->add_option("--seed", pack_seed);

    // unpack
    std::string unpack_in, unpack_arch_out;
    bool unpack_hex = false;
    auto* unpack_cmd = app.add_subcommand("unpack", "validate a SeedPack and show its contents");
    unpack_cmd->add_option("--in", unpack_in)->required();
    unpack_cmd->add_option("--out-arch", unpack_arch_out, "write the descriptor text here");
    unpack_cmd->add_flag("--hex-dump", unpack_hex, "print section offsets");

    // gradcheck
    std::string gc_family = "all";
    std::uint64_t gc_seed = 7;
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference layer gradient suite");
    gc_cmd->add_option("--family", gc_family, "family name or 'all'");
    gc_cmd->add_option("--seed", gc_seed);

    // ablate
    TrainFlags ablate_flags;
    std::string ablate_families_arg = "all";
    std::string ablate_out;
    int ablate_trials = 3;
    auto* ablate_cmd = app.add_subcommand("ablate", "transform-family ablation table");
    add_train_like_flags(ablate_cmd, ablate_flags);
    ablate_cmd->add_option("--families", ablate_families_arg, "'all' or comma-separated names");
    ablate_cmd->add_option("--trials", ablate_trials);
    ablate_cmd->add_option("--out", ablate_out, "CSV output path (default stdout)");

    // sweep
    TrainFlags sweep_flags;
    std::string sweep_axis = "fanout";
    std::string sweep_values = "1,2,5";
    std::string sweep_out;
    auto* sweep_cmd = app.add_subcommand("sweep", "hyperparameter sweep curve");
    add_train_like_flags(sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--axis", sweep_axis, "omega_bounds | psi_bounds | fanout | c_s");
    sweep_cmd->add_option("--values", sweep_values,
                          "comma-separated values; lo:hi pairs for bound axes");
    sweep_cmd->add_option("--out", sweep_out, "CSV output path (default stdout)");

    // sample-hparams
    std::string sh_family = "sinusoidal";
    std::uint64_t sh_seed = 0;
    int sh_count = 4;
    auto* sh_cmd = app.add_subcommand("sample-hparams", "print a deterministic hyperparameter draw");
    sh_cmd->add_option("--family", sh_family);
    sh_cmd->add_option("--seed", sh_seed);
    sh_cmd->add_option("--count", sh_count);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        err << app.help();
        return 1;
    }

    try {
        if (*train_cmd) {
            return run_train(train_flags, out, err);
        }
        if (*eval_cmd) {
            return run_eval(eval_pack, eval_flags, out);
        }
        if (*flops_cmd) {
            const ArchDescriptor arch = resolve_arch(flops_arch, flops_hw[0], flops_hw[1], 0);
            if (flops_compare) {
                const ArchDescriptor std_desc = standardize(arch);
                ArchDescriptor fm_desc = arch;
                bool has_sinefm = false;
                for (const auto& layer : arch.layers) {
                    has_sinefm = has_sinefm || std::holds_alternative<SineFMConfig>(layer);
                }
                if (!has_sinefm) {
                    fm_desc = convert_to_sinefm(arch, flops_cs, flops_fanout,
                                                resolve_family(flops_family),
                                                substream(flops_seed, 1));
                }
                const CostReport fm = model_cost(fm_desc, flops_hw[0], flops_hw[1]);
                const CostReport std_report = model_cost(std_desc, flops_hw[0], flops_hw[1]);
                const CostRatios ratios = compare(fm, std_report);
                if (flops_json) {
                    std::ostringstream combined;
                    combined << "{\"sinefm\": " << cost_to_json(fm)
                             << ", \"standard\": " << cost_to_json(std_report)
                             << ", \"ratio\": {\"params\": " << ratios.params
                             << ", \"flops\": " << ratios.flops << "}}\n";
                    out << combined.str();
                } else {
                    // Comparison view is CSV: both tables, then the ratio row.
                    out << "# sinefm\n" << cost_to_csv(fm);
                    out << "# standard\n" << cost_to_csv(std_report);
                    out << "ratio," << ratios.params << "," << ratios.flops << "\n";
                }
            } else {
                const CostReport report = model_cost(arch, flops_hw[0], flops_hw[1]);
                if (flops_json) {
                    out << cost_to_json(report) << "\n";
                } else if (flops_csv) {
                    out << cost_to_csv(report);
                } else {
                    out << cost_to_text(report);
                }
            }
            return 0;
        }
        if (*pack_cmd) {
            const ArchDescriptor arch = resolve_arch(pack_arch, 0, 0, 0);
            const SeedPlan seeds(pack_seed);
            Model<float> model = build<float>(arch, seeds.init);
            save_pack(model, pack_out);
            err << "wrote " << pack_size_bytes(arch) << " bytes to " << pack_out << "\n";
            return 0;
        }
        if (*unpack_cmd) {
            std::ifstream in(unpack_in, std::ios::binary);
            if (!in) {
                throw FormatError("cannot open SeedPack file: " + unpack_in);
            }
            std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                            std::istreambuf_iterator<char>());
            const Model<float> model = unpack<float>(bytes);
            out << "SeedPack OK: " << bytes.size() << " bytes, "
                << model.descriptor.layers.size() << " layers, "
                << model.parameter_count() << " learnable floats\n";
            if (unpack_hex) {
                out << hex_dump(bytes);
            }
            if (!unpack_arch_out.empty()) {
                save_descriptor(model.descriptor, unpack_arch_out);
            }
            return 0;
        }
        if (*gc_cmd) {
            std::vector<TransformFamily> families;
            if (gc_family == "all") {
                families = all_families();
            } else {
                families.push_back(resolve_family(gc_family));
            }
            bool ok = true;
            out << "family,max_rel_error\n";
            for (const TransformFamily family : families) {
                const double error = grad_check_layer(family, gc_seed);
                out << family_name(family) << "," << error << "\n";
                ok = ok && error < 1e-4;
            }
            if (!ok) {
                err << "gradient check failed (max relative error >= 1e-4)\n";
                return 3;
            }
            return 0;
        }
        if (*ablate_cmd) {
            const SeedPlan seeds(ablate_flags.seed);
            std::vector<TransformFamily> families;
            if (ablate_families_arg == "all") {
                families = all_families();
            } else {
                for (const auto& name : split_csv(ablate_families_arg)) {
                    families.push_back(resolve_family(name));
                }
            }
            const DatasetSpec data_spec =
                dataset_spec_from_flags(ablate_flags.data, ablate_flags, seeds);
            const ArchDescriptor arch =
                resolve_arch(ablate_flags.arch, data_spec.kind == DatasetKind::SynthSeg ? 32 : 16,
                             data_spec.kind == DatasetKind::SynthSeg ? 32 : 16,
                             data_spec.kind == DatasetKind::SynthSeg ? 2 : 4);
            const AblationTable table =
                ablate_families<float>(arch, families, data_spec, optim_from_flags(ablate_flags),
                                       ablate_trials, seeds.transforms, &err);
            write_output(table.to_csv(), ablate_out, out);
            return 0;
        }
        if (*sweep_cmd) {
            const SeedPlan seeds(sweep_flags.seed);
            const DatasetSpec data_spec =
                dataset_spec_from_flags(sweep_flags.data, sweep_flags, seeds);
            const ArchDescriptor arch =
                resolve_arch(sweep_flags.arch, data_spec.kind == DatasetKind::SynthSeg ? 32 : 16,
                             data_spec.kind == DatasetKind::SynthSeg ? 32 : 16,
                             data_spec.kind == DatasetKind::SynthSeg ? 2 : 4);
            const SweepCurve curve = sweep_hyperparams<float>(
                sweep_axis_from_name(sweep_axis), split_csv(sweep_values), arch, data_spec,
                optim_from_flags(sweep_flags), seeds.transforms, &err);
            write_output(curve.to_csv(), sweep_out, out);
            return 0;
        }
        if (*sh_cmd) {
            const TransformSpec spec =
                sample_hyperparams(sh_seed, resolve_family(sh_family), sh_count);
            out << "channel,name,value\n";
            out.precision(17);
            for (std::size_t i = 0; i < spec.params.size(); ++i) {
                const ChannelParams& p = spec.params[i];
                switch (spec.family) {
                case TransformFamily::Monomial:
                    out << i << ",beta," << p.beta << "\n";
                    break;
                case TransformFamily::ChebyshevPoly:
                case TransformFamily::HermitePoly:
                case TransformFamily::LegendrePoly:
                    out << i << ",degree," << p.degree << "\n";
                    break;
                case TransformFamily::GaussianRBF:
                case TransformFamily::MultiquadraticRBF:
                case TransformFamily::InverseQuadraticRBF:
                case TransformFamily::InverseMultiquadraticRBF:
                    out << i << ",eps," << p.eps << "\n";
                    break;
                case TransformFamily::Sinusoidal:
                    out << i << ",omega," << p.omega << "\n";
                    out << i << ",psi," << p.psi << "\n";
                    break;
                }
            }
            return 0;
        }
    } catch (const CorruptionError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace sinefm::cli
