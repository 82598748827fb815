#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "bayescloud/corpus.hpp"
#include "bayescloud/dataset.hpp"
#include "bayescloud/error.hpp"
#include "bayescloud/http_server.hpp"
#include "bayescloud/inference.hpp"
#include "bayescloud/integration.hpp"
#include "bayescloud/json_io.hpp"
#include "bayescloud/learning.hpp"
#include "bayescloud/registry.hpp"

using namespace bayescloud;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInput = 2, kCompute = 3 };

std::string read_input(const std::string& path) {
    if (path == "-") return {std::istreambuf_iterator<char>(std::cin), {}};
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'", {{"path", path}});
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    out.close();
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'", {{"path", path}});
}

BayesianNetwork load_model(const std::string& path) { return compile_script(read_input(path)); }

std::string g6(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

void print_marginals(const inference::Marginals& ms) {
    for (const auto& m : ms) {
        if (const auto* c = std::get_if<inference::Categorical>(&m.distribution)) {
            std::cout << m.variable << '\n';
            for (std::size_t s = 0; s < c->states.size(); ++s) {
                std::cout << "  " << c->states[s] << ": " << g6(c->probabilities[s]) << '\n';
            }
        } else {
            const auto& mix = std::get<inference::GaussianMixture>(m.distribution);
            std::cout << m.variable << " (mixture, mean " << g6(mix.mean()) << ")\n";
            for (const auto& k : mix.components) {
                std::cout << "  weight " << g6(k.weight) << ": mean " << g6(k.mean) << ", variance " << g6(k.variance)
                          << '\n';
            }
        }
    }
}

void print_report(const integration::MergeReport& r) {
    std::cout << "method: " << integration::to_string(r.method) << '\n';
    std::cout << "shared:";
    for (const auto& s : r.shared) std::cout << ' ' << s;
    std::cout << '\n';
    if (r.objective) std::cout << "objective: " << g6(*r.objective) << " after " << r.iterations << " iterations\n";
    if (r.sample_count) std::cout << "samples: " << *r.sample_count << " (rejected " << r.rejected_samples << ")\n";
    for (const auto& w : r.warnings) std::cout << "warning: " << w << '\n';
}

std::vector<std::string> split_names(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    for (const auto& item : raw) {
        std::stringstream ss(item);
        std::string name;
        while (std::getline(ss, name, ',')) {
            if (!name.empty()) out.push_back(name);
        }
    }
    return out;
}

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayes Cloud: Bayesian network scripting, inference, integration and learning"};
    app.require_subcommand(1);
    bool as_json = false;
    app.add_flag("--json", as_json, "Emit one JSON document");

    std::function<void()> action;
    auto json_flag = [&](CLI::App* sub) { sub->add_flag("--json", as_json, "Emit one JSON document"); };

    // validate
    std::string model_path;
    auto* validate_cmd = app.add_subcommand("validate", "Compile and check a .bns model");
    validate_cmd->add_option("model", model_path, "Model script (- for stdin)")->required();
    json_flag(validate_cmd);
    int validate_status = kOk;
    validate_cmd->callback([&] {
        action = [&] {
            const auto net = load_model(model_path);
            const auto report = validate(net);
            if (as_json) {
                std::cout << report_to_json(report).dump(2) << '\n';
            } else if (report.ok()) {
                std::cout << "OK\n";
            } else {
                for (const auto& f : report.findings) std::cout << f.code << ' ' << f.variable << ": " << f.message << '\n';
            }
            if (!report.ok()) validate_status = kInput;
        };
    });

    // infer
    std::string evidence_path;
    std::vector<std::string> query;
    bool use_gibbs = false;
    inference::GibbsOptions gibbs;
    auto* infer_cmd = app.add_subcommand("infer", "Posterior marginals given evidence");
    infer_cmd->add_option("model", model_path, "Model script (- for stdin)")->required();
    infer_cmd->add_option("--evidence", evidence_path, "Evidence script (- for stdin)");
    infer_cmd->add_option("--query", query, "Variables to report (comma separated; default all)");
    infer_cmd->add_flag("--gibbs", use_gibbs, "Force Gibbs sampling");
    infer_cmd->add_option("--samples", gibbs.samples, "Gibbs sweeps including burn-in");
    infer_cmd->add_option("--burn-in", gibbs.burn_in, "Gibbs burn-in sweeps");
    infer_cmd->add_option("--seed", gibbs.seed, "Random seed");
    json_flag(infer_cmd);
    infer_cmd->callback([&] {
        action = [&] {
            const auto net = load_model(model_path);
            const auto evidence = evidence_path.empty() ? script::Evidence{} : script::parse_evidence(read_input(evidence_path));
            inference::InferOptions opts;
            opts.method = use_gibbs ? inference::Method::Gibbs : inference::Method::Auto;
            opts.gibbs = gibbs;
            const auto ms = inference::infer(net, evidence, split_names(query), opts);
            if (as_json) {
                std::cout << marginals_to_json(ms).dump(2) << '\n';
            } else {
                print_marginals(ms);
            }
        };
    });

    // merge
    std::string second_path, method_name = "optimize", out_path;
    integration::MergeOptions merge_opts;
    auto* merge_cmd = app.add_subcommand("merge", "Integrate two models");
    merge_cmd->add_option("a", model_path, "First model")->required();
    merge_cmd->add_option("b", second_path, "Second model")->required();
    merge_cmd->add_option("--method", method_name, "disjoint, optimize or simulate")
        ->check(CLI::IsMember({"disjoint", "optimize", "simulate"}));
    merge_cmd->add_option("--samples", merge_opts.sample_count, "Simulation sample count");
    merge_cmd->add_option("--seed", merge_opts.seed, "Random seed");
    merge_cmd->add_option("--tolerance", merge_opts.tolerance, "Optimizer tolerance");
    merge_cmd->add_option("--max-iterations", merge_opts.max_iterations, "Optimizer iteration cap");
    merge_cmd->add_option("--out", out_path, "Write the merged script here (default stdout)");
    json_flag(merge_cmd);
    merge_cmd->callback([&] {
        action = [&] {
            const auto a = load_model(model_path);
            const auto b = load_model(second_path);
            const auto r = integration::merge(a, b, integration::parse_method(method_name), merge_opts);
            const auto text = to_script(r.network);
            if (as_json) {
                if (!out_path.empty()) write_output(out_path, text);
                json doc{{"report", r.report.to_json()}, {"structure", structure_to_json(r.network)}};
                if (out_path.empty()) doc["script"] = text;
                std::cout << doc.dump(2) << '\n';
            } else if (out_path.empty()) {
                std::cout << text;
                std::cerr << "merged " << r.network.size() << " variables\n";
            } else {
                write_output(out_path, text);
                print_report(r.report);
            }
        };
    });

    // sample
    std::size_t sample_n = 1000;
    std::uint64_t seed = 1;
    auto* sample_cmd = app.add_subcommand("sample", "Forward-sample a model to CSV");
    sample_cmd->add_option("model", model_path, "Model script")->required();
    sample_cmd->add_option("-n", sample_n, "Row count");
    sample_cmd->add_option("--seed", seed, "Random seed");
    sample_cmd->add_option("--out", out_path, "CSV destination (default stdout)");
    json_flag(sample_cmd);
    sample_cmd->callback([&] {
        action = [&] {
            const auto net = load_model(model_path);
            const auto data = inference::sample_forward(net, sample_n, seed);
            std::ostringstream csv;
            write_csv(csv, data);
            if (as_json) {
                if (!out_path.empty()) write_output(out_path, csv.str());
                json doc{{"rows", data.row_count()}, {"seed", seed}, {"columns", json::array()}};
                for (const auto& c : data.columns) doc["columns"].push_back(c.name);
                if (out_path.empty()) doc["csv"] = csv.str();
                std::cout << doc.dump(2) << '\n';
            } else {
                write_output(out_path, csv.str());
            }
        };
    });

    // learn-params
    std::string data_path;
    learning::LearnOptions learn_opts;
    auto* lp_cmd = app.add_subcommand("learn-params", "Fit CPDs for a given structure");
    lp_cmd->add_option("structure", model_path, "Model script supplying variables and arcs")->required();
    lp_cmd->add_option("--data", data_path, "CSV data (- for stdin)")->required();
    lp_cmd->add_option("--alpha", learn_opts.dirichlet_alpha, "Dirichlet pseudo-count")->check(CLI::NonNegativeNumber);
    lp_cmd->add_option("--out", out_path, "Write the fitted script here (default stdout)");
    json_flag(lp_cmd);
    lp_cmd->callback([&] {
        action = [&] {
            const auto structure = load_model(model_path);
            std::istringstream in(read_input(data_path));
            const auto data = read_csv(in, &structure.variables());
            const auto fit = learning::learn_parameters(structure.dag(), data, learn_opts);
            const auto text = to_script(fit.network);
            for (const auto& w : fit.warnings) std::cerr << "warning: " << w << '\n';
            if (as_json) {
                if (!out_path.empty()) write_output(out_path, text);
                json doc{{"warnings", fit.warnings}, {"bic", learning::bic_score(fit.network, data).total}};
                if (out_path.empty()) doc["script"] = text;
                std::cout << doc.dump(2) << '\n';
            } else {
                write_output(out_path, text);
            }
        };
    });

    // learn-structure
    auto* ls_cmd = app.add_subcommand("learn-structure", "Hill-climb a BIC-optimal structure from discrete data");
    ls_cmd->add_option("--data", data_path, "CSV data (- for stdin)")->required();
    ls_cmd->add_option("--restarts", learn_opts.restarts, "Restart count");
    ls_cmd->add_option("--seed", learn_opts.seed, "Random seed");
    ls_cmd->add_option("--max-parents", learn_opts.max_parents, "Parent limit per variable");
    ls_cmd->add_option("--alpha", learn_opts.dirichlet_alpha, "Dirichlet pseudo-count for the fitted CPDs")
        ->check(CLI::NonNegativeNumber);
    ls_cmd->add_option("--out", out_path, "Write the learned script here (default stdout)");
    json_flag(ls_cmd);
    ls_cmd->callback([&] {
        action = [&] {
            std::istringstream in(read_input(data_path));
            const auto data = read_csv(in);
            const auto result = learning::learn_structure(data, learn_opts);
            const auto text = to_script(result.network);
            if (as_json) {
                if (!out_path.empty()) write_output(out_path, text);
                json doc{{"score", result.score}, {"structure", structure_to_json(result.network)},
                         {"warnings", result.warnings}};
                if (out_path.empty()) doc["script"] = text;
                std::cout << doc.dump(2) << '\n';
            } else {
                write_output(out_path, text);
                if (!out_path.empty()) std::cout << "BIC " << g6(result.score) << '\n';
            }
        };
    });

    // gen-geo
    corpus::GeoParams geo;
    auto* geo_cmd = app.add_subcommand("gen-geo", "Generate the geospatial dangerousness pyramid");
    geo_cmd->add_option("--depth", geo.depth, "Pyramid depth");
    geo_cmd->add_option("--k", geo.k, "Hot-to-hot propagation probability, 0.5 < k < 1");
    geo_cmd->add_option("--p0", geo.root_hot_prior, "Root hot-zone prior");
    geo_cmd->add_option("--out", out_path, "Destination (default stdout)");
    json_flag(geo_cmd);
    geo_cmd->callback([&] {
        action = [&] {
            const auto net = corpus::generate_geospatial(geo);
            const auto text = to_script(net);
            if (as_json) {
                if (!out_path.empty()) write_output(out_path, text);
                json doc{{"nodes", net.size()}, {"arcs", net.arcs().size()},
                         {"parameters", {{"depth", geo.depth}, {"k", geo.k}, {"p0", geo.root_hot_prior}}}};
                if (out_path.empty()) doc["script"] = text;
                std::cout << doc.dump(2) << '\n';
            } else {
                write_output(out_path, text);
            }
        };
    });

    // corpus
    std::string out_dir;
    auto* corpus_cmd = app.add_subcommand("corpus", "Write the EVD model corpus");
    corpus_cmd->add_option("--out", out_dir, "Output directory")->required();
    json_flag(corpus_cmd);
    corpus_cmd->callback([&] {
        action = [&] {
            const auto entries = corpus::build_corpus(out_dir);
            if (as_json) {
                json doc = json::array();
                for (const auto& e : entries) doc.push_back({{"file", e.file}, {"nodes", e.nodes}});
                std::cout << doc.dump(2) << '\n';
            } else {
                for (const auto& e : entries) std::cout << e.file << " (" << e.nodes << " nodes)\n";
            }
        };
    });

    // scenario
    std::string reports_path;
    auto* scenario_cmd = app.add_subcommand("scenario", "Rank regions by hot-zone posterior");
    scenario_cmd->add_option("model", model_path, "Geospatial or integrated model")->required();
    scenario_cmd->add_option("--reports", reports_path, "Region reports as an evidence script (- for stdin)");
    json_flag(scenario_cmd);
    scenario_cmd->callback([&] {
        action = [&] {
            const auto net = load_model(model_path);
            const auto reports = reports_path.empty() ? script::Evidence{} : script::parse_evidence(read_input(reports_path));
            const auto risks = corpus::run_scenario(net, reports);
            if (as_json) {
                std::cout << risks_to_json(risks).dump(2) << '\n';
            } else {
                for (const auto& r : risks) std::cout << r.region << ' ' << g6(r.hot_probability) << '\n';
            }
        };
    });

    // serve
    int port = 8080;
    std::string data_dir = "bayescloud-data";
    std::string host = "127.0.0.1";
    auto* serve_cmd = app.add_subcommand("serve", "Run the model registry HTTP service");
    serve_cmd->add_option("--port", port, "Listen port (BAYESCLOUD_PORT overrides)");
    serve_cmd->add_option("--data-dir", data_dir, "Record directory (BAYESCLOUD_DATA_DIR overrides)");
    serve_cmd->add_option("--host", host, "Listen address");
    json_flag(serve_cmd);
    int serve_status = kOk;
    serve_cmd->callback([&] {
        action = [&] {
            if (const char* env = std::getenv("BAYESCLOUD_PORT")) {
                try {
                    port = std::stoi(env);
                } catch (const std::exception&) {
                    throw Error(ErrorCode::InvalidParams, std::string("BAYESCLOUD_PORT is not a port: ") + env);
                }
            }
            if (const char* env = std::getenv("BAYESCLOUD_DATA_DIR")) data_dir = env;
            registry::Registry reg(data_dir);
            HttpService service(reg);
            const int bound = service.bind(host, port);
            if (bound < 0) throw Error(ErrorCode::IoError, "cannot listen on " + host + ":" + std::to_string(port));
            if (as_json) {
                std::cout << json{{"port", bound}, {"data_dir", data_dir}, {"records", reg.size()}}.dump() << std::endl;
            } else {
                std::cout << "listening on " << host << ':' << bound << " with " << reg.size() << " records in "
                          << data_dir << std::endl;
            }
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::thread watcher([&] {
                while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
                service.stop();
            });
            if (!service.run()) serve_status = kCompute;
            g_stop = true;
            watcher.join();
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        action();
    } catch (const Error& e) {
        std::cerr << "error [" << e.token() << "]: " << e.what() << '\n';
        if (as_json) std::cout << json{{"error", e.to_json()}}.dump(2) << '\n';
        return is_computation_error(e.code()) ? kCompute : kInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        if (as_json) std::cout << json{{"error", {{"code", "internal_error"}, {"message", e.what()}}}}.dump(2) << '\n';
        return kCompute;
    }
    return validate_status != kOk ? validate_status : serve_status;
}
