// Command-line front end for the scenario audit library.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "audit/assessment.hpp"
#include "audit/error.hpp"
#include "audit/model_spec.hpp"
#include "audit/prompt.hpp"
#include "audit/query.hpp"
#include "audit/service.hpp"
#include "audit/synth.hpp"
#include "audit/workspace.hpp"

namespace fs = std::filesystem;
using namespace audit;

namespace {

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    write_file_atomic(out, text);
  }
}

std::vector<Anchor> anchors_from_file(const std::string& path) {
  const json v = read_json_file(path);
  const json& list = v.is_object() && v.contains("anchors") ? v.at("anchors") : v;
  if (!list.is_array()) throw Error(ErrorKind::parse, "expected an array of anchors", "anchors");
  std::vector<Anchor> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    out.push_back(anchor_from_json(list[i], "anchors[" + std::to_string(i) + "]"));
  }
  return out;
}

std::optional<ScenarioWindow> find_window(const Workspace& ws, const std::string& window_id,
                                          const std::string& collection) {
  std::vector<std::string> ids = collection.empty() ? ws.collection_ids()
                                                    : std::vector<std::string>{collection};
  for (const auto& id : ids) {
    const Collection c = ws.load_collection(id);
    if (auto it = c.windows.find(window_id); it != c.windows.end()) return it->second;
  }
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario-window risk audit toolkit"};
  app.require_subcommand(1);
  std::string store = ".";
  auto add_store = [&](CLI::App* cmd) {
    cmd->add_option("--store", store, "Store directory")->envname("AUDIT_STORE");
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Merge JSONL scene states into the store");
  std::vector<std::string> ingest_files;
  ingest->add_option("files", ingest_files, "JSONL files")->required();
  add_store(ingest);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic JSONL fixture");
  std::uint64_t seed = 42;
  std::string synth_spec, synth_out;
  synth->add_option("--seed", seed, "Generator seed");
  synth->add_option("--spec", synth_spec, "Generator spec (JSON); defaults apply when omitted");
  synth->add_option("--out", synth_out, "Output file (stdout when omitted)");

  // query
  auto* query = app.add_subcommand("query", "Run a scenario query against the store");
  std::string query_file, query_out;
  query->add_option("--query", query_file, "Query file (JSON)")->required();
  query->add_option("--out", query_out, "Write the scenario context here");
  add_store(query);

  // anchors
  auto* anchors = app.add_subcommand("anchors", "Promote query hits to anchors");
  std::string context_file, anchors_out;
  std::size_t anchor_count = 16;
  int k = kDefaultPreSeconds, m = kDefaultPostSeconds;
  anchors->add_option("--context", context_file, "Scenario context from `query`")->required();
  anchors->add_option("--count", anchor_count, "Maximum number of anchors");
  anchors->add_option("--k", k, "Seconds before the anchor");
  anchors->add_option("--m", m, "Seconds after the anchor");
  anchors->add_option("--out", anchors_out, "Anchors file (stdout when omitted)");
  add_store(anchors);

  // window
  auto* window = app.add_subcommand("window", "Build windows for anchors into a collection");
  std::string anchors_file, collection_name;
  window->add_option("--anchors", anchors_file, "Anchors file (JSON)")->required();
  window->add_option("--k", k, "Seconds before the anchor");
  window->add_option("--m", m, "Seconds after the anchor");
  window->add_option("--collection", collection_name, "Collection id")->required();
  add_store(window);

  // prompt
  auto* prompt = app.add_subcommand("prompt", "Render the prompt for a stored window");
  std::string window_id, prompt_spec = "fixed_standard", prompt_collection;
  bool print = false, no_images = false;
  prompt->add_option("--window", window_id, "Window id")->required();
  prompt->add_option("--spec", prompt_spec, "fixed_standard or a template file");
  prompt->add_option("--collection", prompt_collection, "Collection to search (all by default)");
  prompt->add_flag("--print", print, "Print the full prompt text (default prints the hash)");
  prompt->add_flag("--no-images", no_images, "Do not attach frame images");
  add_store(prompt);

  // run
  auto* run = app.add_subcommand("run", "Evaluate a collection with a set of models");
  std::string run_collection, models_file, run_prompt = "fixed_standard", run_id_opt;
  std::optional<int> parallel;
  std::optional<std::uint64_t> shuffle_seed;
  run->add_option("--collection", run_collection, "Collection id")->required();
  run->add_option("--models", models_file, "Model specs (JSON)")->required();
  run->add_option("--prompt", run_prompt, "fixed_standard or a template file");
  run->add_option("--parallel", parallel, "Cap on concurrent requests per model");
  run->add_option("--run-id", run_id_opt, "Explicit run id");
  run->add_option("--shuffle-seed", shuffle_seed, "Permute dispatch order");
  run->add_flag("--no-images", no_images, "Do not attach frame images");
  add_store(run);

  // strictness
  auto* strictness = app.add_subcommand("strictness", "Accepted/rejected counts per model");
  std::string run_id;
  strictness->add_option("--run", run_id, "Run id")->required();
  add_store(strictness);

  // report
  auto* report = app.add_subcommand("report", "Write the analysis report of a run");
  std::string report_out;
  int tau = 4;
  report->add_option("--run", run_id, "Run id")->required();
  report->add_option("--out", report_out, "report.json path; CSVs are written beside it");
  report->add_option("--tau", tau, "High-risk threshold")->check(CLI::Range(1, 6));
  add_store(report);

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  std::string bind = "127.0.0.1:8080";
  serve->add_option("--bind", bind, "host:port");
  add_store(serve);

  // personas
  auto* personas = app.add_subcommand("personas", "Write the three reference mock personas");
  std::string personas_out;
  personas->add_option("--out", personas_out, "Output file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    const Workspace ws(store);
    if (*ingest) {
      std::vector<fs::path> paths(ingest_files.begin(), ingest_files.end());
      const SceneStore s = ws.ingest(paths);
      std::cerr << "store holds " << s.size() << " states in " << s.acquisitions().size()
                << " acquisitions\n";
    } else if (*synth) {
      const SynthSpec spec = synth_spec.empty() ? SynthSpec{} : synth_spec_from_json(read_json_file(synth_spec));
      emit(synthesize(seed, spec), synth_out);
    } else if (*query) {
      const SceneStore s = ws.load_store();
      const ScenarioContext ctx = execute_query(s, query_from_json(read_json_file(query_file)));
      emit(to_json(ctx).dump(2) + "\n", query_out);
      std::cerr << ctx.hits.size() << " hits\n";
    } else if (*anchors) {
      const SceneStore s = ws.load_store();
      const auto ctx = scenario_context_from_json(read_json_file(context_file));
      json out = json::array();
      for (const auto& a : promote_hits(ctx, s, anchor_count, k, m)) out.push_back(to_json(a));
      emit(out.dump(2) + "\n", anchors_out);
    } else if (*window) {
      const SceneStore s = ws.load_store();
      Collection c;
      if (ws.has_collection(collection_name)) {
        c = ws.load_collection(collection_name);
      } else {
        c.collection_id = collection_name;
        c.name = collection_name;
      }
      for (const auto& a : anchors_from_file(anchors_file)) {
        add_window(c, build_window(s, a, k, m));
        c.anchors.push_back(a);
      }
      ws.save_collection(c);
      for (const auto& id : c.window_ids) std::cout << id << "\n";
    } else if (*prompt) {
      const auto w = find_window(ws, window_id, prompt_collection);
      if (!w) throw Error(ErrorKind::not_found, "no stored window " + window_id, "window");
      const RenderedPrompt r = render_prompt(*w, resolve_prompt_spec(prompt_spec, !no_images));
      if (print) {
        std::cout << r.text;
      } else {
        std::cout << r.prompt_hash << "\n";
      }
      for (const auto& a : r.attachments) std::cerr << "attachment: " << a << "\n";
    } else if (*run) {
      const auto models = model_specs_from_json(read_json_file(models_file));
      const PromptSpec p = resolve_prompt_spec(run_prompt, !no_images);
      const std::string id = ws.create_run(run_collection, models, p, run_id_opt);
      RunOptions options;
      options.parallel = parallel;
      options.shuffle_seed = shuffle_seed;
      const RunSummary summary = ws.execute_created_run(id, ws.load_store(), options);
      std::cout << summary.run_id << "\n";
      for (const auto& [model, counts] : summary.status_by_model) {
        std::cerr << model << ":";
        for (const auto& [status, n] : counts) std::cerr << " " << to_string(status) << "=" << n;
        std::cerr << "\n";
      }
    } else if (*strictness) {
      const auto records = ws.load_records(run_id);
      std::cout << to_json(strictness_report(records)).dump(2) << "\n";
    } else if (*report) {
      ReportOptions options;
      options.analysis.tau = tau;
      const ReportBundle bundle = ws.report(run_id, options);
      if (report_out.empty()) {
        std::cout << bundle.report_json;
      } else {
        write_report(bundle, report_out);
      }
    } else if (*serve) {
      const auto [host, port] = parse_bind_address(bind);
      Service service(store);
      const int bound = service.bind(host, port);
      std::cerr << "listening on " << host << ":" << bound << "\n";
      service.listen();
    } else if (*personas) {
      json out = json::array();
      for (const auto& p : reference_personas()) out.push_back(to_json(p));
      emit(out.dump(2) + "\n", personas_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
