#include "rae/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rae/attacks.hpp"
#include "rae/dataset.hpp"
#include "rae/errors.hpp"
#include "rae/image.hpp"
#include "rae/model.hpp"
#include "rae/pipeline.hpp"
#include "rae/rdh.hpp"

namespace rae::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open '" + tmp + "' for writing");
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw FormatError("short write to '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw FormatError("cannot rename '" + tmp + "': " + ec.message());
    }
}

struct DataSpec {
    bool synthetic = true;
    std::string idx_images;
    std::string idx_labels;
};

DataSpec parse_data_spec(const std::string& spec) {
    DataSpec d;
    if (spec == "synthetic") return d;
    if (spec.rfind("idx:", 0) == 0) {
        const std::string rest = spec.substr(4);
        const auto comma = rest.find(',');
        if (comma == std::string::npos)
            throw DomainError("--data idx form is idx:<images>,<labels>");
        d.synthetic = false;
        d.idx_images = rest.substr(0, comma);
        d.idx_labels = rest.substr(comma + 1);
        return d;
    }
    throw DomainError("--data must be 'synthetic' or 'idx:<images>,<labels>'");
}

std::vector<double> parse_eps_list(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        const auto comma = csv.find(',', pos);
        const std::string tok =
            csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw DomainError("bad value in --eps-list: '" + tok + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw DomainError("--eps-list is empty");
    return out;
}

std::vector<attacks::Method> parse_methods(const std::string& csv) {
    std::vector<attacks::Method> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        const auto comma = csv.find(',', pos);
        const std::string tok =
            csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        out.push_back(attacks::method_from_name(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw DomainError("--methods is empty");
    return out;
}

ordered_json attack_result_json(const attacks::AttackResult& r, const std::string& method,
                                double eps, int label) {
    ordered_json j;
    j["report_version"] = 1;
    j["method"] = method;
    j["eps"] = eps;
    j["label_attacked"] = label;
    j["success"] = r.success;
    j["iterations"] = r.iterations;
    j["l2_distortion"] = r.l2_distortion;
    return j;
}

int run_impl(const std::vector<std::string>& args) {
    CLI::App app{"reversible adversarial example toolkit"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "train the reference classifier");
    std::string train_data = "synthetic";
    std::string train_out;
    int train_epochs = 20;
    std::uint64_t train_seed = 42;
    int train_n = 10000;
    double train_lr = 0.05;
    int train_batch = 32;
    train_cmd->add_option("--data", train_data, "synthetic | idx:<images>,<labels>");
    train_cmd->add_option("--out", train_out, "output model path")->required();
    train_cmd->add_option("--epochs", train_epochs, "training epochs");
    train_cmd->add_option("--seed", train_seed, "seed for data and init");
    train_cmd->add_option("--n", train_n, "synthetic dataset size");
    train_cmd->add_option("--lr", train_lr, "learning rate");
    train_cmd->add_option("--batch", train_batch, "minibatch size");

    // classify
    auto* classify_cmd = app.add_subcommand("classify", "classify one image");
    std::string cls_model, cls_in;
    classify_cmd->add_option("--model", cls_model)->required();
    classify_cmd->add_option("--in", cls_in)->required();

    // shared attack flags
    struct AttackFlags {
        std::string model, in, out, report, method = "fgsm";
        double eps = 8.0;
        double alpha = 0.0;
        int iters = 20;
        double overshoot = 0.02;
        double kappa = 0.0;
        int label = -1;
    };

    auto add_attack_flags = [](CLI::App* cmd, AttackFlags& f) {
        cmd->add_option("--model", f.model)->required();
        cmd->add_option("--in", f.in)->required();
        cmd->add_option("--method", f.method)
            ->check(CLI::IsMember({"fgsm", "igsm", "deepfool", "cw"}));
        cmd->add_option("--eps", f.eps, "budget in 0-255 units");
        cmd->add_option("--alpha", f.alpha, "igsm step (0 = eps/10, min 1)");
        cmd->add_option("--iters", f.iters, "igsm iteration cap");
        cmd->add_option("--overshoot", f.overshoot, "deepfool overshoot");
        cmd->add_option("--kappa", f.kappa, "cw confidence");
        cmd->add_option("--label", f.label, "attack this label instead of the prediction");
        cmd->add_option("--report", f.report, "write a JSON report here");
    };

    auto* attack_cmd = app.add_subcommand("attack", "generate an adversarial example");
    AttackFlags atk;
    add_attack_flags(attack_cmd, atk);
    attack_cmd->add_option("--out", atk.out)->required();

    // create
    auto* create_cmd = app.add_subcommand("create", "create a reversible adversarial example");
    AttackFlags cre;
    std::string cre_backend = "hs";
    int cre_passes = 8, cre_planes = 3;
    bool cre_proceed = false;
    add_attack_flags(create_cmd, cre);
    create_cmd->add_option("--out", cre.out)->required();
    create_cmd->add_option("--backend", cre_backend)->check(CLI::IsMember({"hs", "ce"}));
    create_cmd->add_option("--max-passes", cre_passes);
    create_cmd->add_option("--planes", cre_planes);
    create_cmd->add_flag("--proceed", cre_proceed, "embed even if the attack failed");

    // recover
    auto* recover_cmd = app.add_subcommand("recover", "invert a reversible adversarial example");
    std::string rec_in, rec_backend = "hs", rec_out_original, rec_out_adv, rec_report;
    recover_cmd->add_option("--in", rec_in)->required();
    recover_cmd->add_option("--backend", rec_backend)->check(CLI::IsMember({"hs", "ce"}));
    recover_cmd->add_option("--out-original", rec_out_original)->required();
    recover_cmd->add_option("--out-adv", rec_out_adv)->required();
    recover_cmd->add_option("--report", rec_report);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "success-rate evaluation over a dataset");
    std::string ev_model, ev_data = "synthetic", ev_methods = "fgsm,igsm,deepfool,cw";
    std::string ev_eps = "8,16,32,64", ev_backend = "hs", ev_out;
    int ev_workers = 1, ev_limit = 0, ev_n = 10000;
    std::uint64_t ev_seed = 42;
    eval_cmd->add_option("--model", ev_model)->required();
    eval_cmd->add_option("--data", ev_data);
    eval_cmd->add_option("--methods", ev_methods);
    eval_cmd->add_option("--eps-list", ev_eps);
    eval_cmd->add_option("--backend", ev_backend)->check(CLI::IsMember({"hs", "ce"}));
    eval_cmd->add_option("--out", ev_out)->required();
    eval_cmd->add_option("--workers", ev_workers);
    eval_cmd->add_option("--limit", ev_limit, "evaluate at most this many images");
    eval_cmd->add_option("--n", ev_n, "synthetic dataset size");
    eval_cmd->add_option("--seed", ev_seed, "synthetic dataset seed");

    std::vector<std::string> argv_like;
    argv_like.push_back("rae");
    argv_like.insert(argv_like.end(), args.begin(), args.end());
    std::vector<char*> argv;
    argv.reserve(argv_like.size());
    for (auto& s : argv_like) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 5;
    }

    if (train_cmd->parsed()) {
        classifier::LabeledDataset train_set, test_set;
        const DataSpec spec = parse_data_spec(train_data);
        if (spec.synthetic) {
            const auto full = classifier::generate_shapes_dataset(train_seed, train_n);
            auto parts = classifier::split_dataset(full, 0.8);
            train_set = std::move(parts.first);
            test_set = std::move(parts.second);
        } else {
            train_set = classifier::load_idx(spec.idx_images, spec.idx_labels);
        }
        classifier::TrainConfig cfg;
        cfg.epochs = train_epochs;
        cfg.seed = train_seed;
        cfg.learning_rate = train_lr;
        cfg.batch_size = train_batch;
        const auto result =
            classifier::train(train_set, cfg, test_set.size() ? &test_set : nullptr);
        classifier::save_model(result.params, train_out);
        std::cout << "train accuracy " << result.train_accuracy;
        if (result.test_accuracy >= 0.0) std::cout << ", test accuracy " << result.test_accuracy;
        std::cout << ", final loss " << result.final_loss << "\n";
        return 0;
    }

    if (classify_cmd->parsed()) {
        const auto params = classifier::load_model(cls_model);
        const Image img = read_pnm(cls_in);
        const auto pred = classifier::predict(params, img);
        std::cout << "label " << pred.label << "\nprobabilities";
        for (double p : pred.probabilities.data) std::cout << " " << p;
        std::cout << "\n";
        return 0;
    }

    if (attack_cmd->parsed()) {
        const auto params = classifier::load_model(atk.model);
        const Image img = read_pnm(atk.in);
        const int label =
            atk.label >= 0 ? atk.label : classifier::predict(params, img).label;
        attacks::AttackConfig cfg;
        cfg.method = attacks::method_from_name(atk.method);
        cfg.eps = atk.eps;
        cfg.alpha = atk.alpha;
        cfg.max_iterations = atk.iters;
        cfg.overshoot = atk.overshoot;
        cfg.kappa = atk.kappa;
        const auto result = attacks::run_attack(params, img, label, cfg);
        if (!atk.report.empty())
            write_text_atomic(atk.report,
                              attack_result_json(result, atk.method, atk.eps, label).dump(2) +
                                  "\n");
        if (!result.success) {
            std::cerr << "attack failed: label unchanged\n";
            return 3;
        }
        write_pnm(result.adversarial, atk.out);
        std::cout << "adversarial label "
                  << classifier::predict(params, result.adversarial).label << ", l2 "
                  << result.l2_distortion << "\n";
        return 0;
    }

    if (create_cmd->parsed()) {
        const auto params = classifier::load_model(cre.model);
        const Image img = read_pnm(cre.in);
        pipeline::CreateOptions opt;
        opt.attack.method = attacks::method_from_name(cre.method);
        opt.attack.eps = cre.eps;
        opt.attack.alpha = cre.alpha;
        opt.attack.max_iterations = cre.iters;
        opt.attack.overshoot = cre.overshoot;
        opt.attack.kappa = cre.kappa;
        opt.backend = rdh::backend_from_name(cre_backend);
        opt.rdh.max_passes = cre_passes;
        opt.rdh.max_planes = cre_planes;
        opt.proceed_on_attack_failure = cre_proceed;
        opt.label_override = cre.label;
        auto [rae, report] = pipeline::create_rae(params, img, opt);
        write_pnm(rae, cre.out);
        if (!cre.report.empty()) {
            ordered_json j;
            j["report_version"] = 1;
            j["method"] = cre.method;
            j["eps"] = cre.eps;
            j["backend"] = cre_backend;
            j["attack_success"] = report.attack_success;
            j["label_attacked"] = report.label_attacked;
            j["adversarial_label"] = report.adversarial_label;
            j["rae_label"] = report.rae_label;
            j["adversarial_l2"] = report.adversarial_l2;
            j["rae_l2"] = report.rae_l2;
            j["payload_bits"] = report.payload_bits;
            j["rdh_passes"] = report.embed.passes_used;
            j["max_pixel_change"] = report.embed.max_pixel_change;
            write_text_atomic(cre.report, j.dump(2) + "\n");
        }
        std::cout << "rae label " << report.rae_label << ", payload " << report.payload_bits
                  << " bits\n";
        return 0;
    }

    if (recover_cmd->parsed()) {
        const Image rae = read_pnm(rec_in);
        const auto result = pipeline::recover(rae, rdh::backend_from_name(rec_backend));
        write_pnm(result.original, rec_out_original);
        write_pnm(result.adversarial, rec_out_adv);
        if (!rec_report.empty()) {
            ordered_json j;
            j["report_version"] = 1;
            j["attack_id"] = result.header.attack_id;
            j["backend_id"] = result.header.backend_id;
            j["eps"] = result.header.eps;
            j["dims"] = {result.header.h, result.header.w, result.header.c};
            j["payload_bits"] = result.header.payload_bits;
            write_text_atomic(rec_report, j.dump(2) + "\n");
        }
        std::cout << "recovered original and adversarial images\n";
        return 0;
    }

    if (eval_cmd->parsed()) {
        const auto params = classifier::load_model(ev_model);
        classifier::LabeledDataset data;
        const DataSpec spec = parse_data_spec(ev_data);
        if (spec.synthetic) {
            const auto full = classifier::generate_shapes_dataset(ev_seed, ev_n);
            data = classifier::split_dataset(full, 0.8).second;  // test split
        } else {
            data = classifier::load_idx(spec.idx_images, spec.idx_labels);
        }
        pipeline::EvalOptions opt;
        opt.methods = parse_methods(ev_methods);
        opt.eps_list = parse_eps_list(ev_eps);
        opt.backend = rdh::backend_from_name(ev_backend);
        opt.workers = ev_workers;
        opt.limit = ev_limit;
        const std::string json = pipeline::evaluate_json(params, data, opt);
        write_text_atomic(ev_out, json);
        std::cout << "wrote " << ev_out << "\n";
        return 0;
    }

    return 5;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    try {
        return run_impl(args);
    } catch (const CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return 2;
    } catch (const AttackFailedError& e) {
        std::cerr << "attack failed: " << e.what() << "\n";
        return 3;
    } catch (const DomainError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 5;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace rae::cli
