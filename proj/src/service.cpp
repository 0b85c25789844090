#include "audit/service.hpp"

#include <charconv>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "audit/query.hpp"
#include "audit/workspace.hpp"
#include "httplib.h"

namespace audit {

namespace {

constexpr std::string_view kJson = "application/json";

[[noreturn]] void bad_request(const std::string& message, const std::string& path = {}) {
  throw Error(ErrorKind::parameter, message, path);
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json v = json::parse(req.body, nullptr, false);
  if (v.is_discarded()) throw Error(ErrorKind::parse, "request body is not valid JSON", "$");
  return v;
}

std::int64_t int_param(const httplib::Request& req, const std::string& name) {
  const std::string text = req.get_param_value(name);
  std::int64_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    bad_request("query parameter must be an integer", name);
  }
  return v;
}

int body_int(const json& body, const char* key, int fallback) {
  auto it = body.find(key);
  if (it == body.end()) return fallback;
  if (!it->is_number_integer()) bad_request("expected an integer", key);
  return it->get<int>();
}

}  // namespace

std::string_view to_string(ApiErrorCode code) noexcept {
  switch (code) {
    case ApiErrorCode::not_found: return "not_found";
    case ApiErrorCode::invalid_request: return "invalid_request";
    case ApiErrorCode::conflict: return "conflict";
    case ApiErrorCode::internal: return "internal";
  }
  return "internal";
}

ApiError to_api_error(const Error& e) {
  ApiErrorCode code = ApiErrorCode::internal;
  switch (e.kind()) {
    case ErrorKind::not_found: code = ApiErrorCode::not_found; break;
    case ErrorKind::parse:
    case ErrorKind::parameter:
    case ErrorKind::template_error:
    case ErrorKind::configuration:
    case ErrorKind::coverage:
    case ErrorKind::insufficient_cohort: code = ApiErrorCode::invalid_request; break;
    case ErrorKind::duplicate_key:
    case ErrorKind::conflict: code = ApiErrorCode::conflict; break;
    case ErrorKind::integrity:
    case ErrorKind::io: code = ApiErrorCode::internal; break;
  }
  return {code, e.message(), e.field_path()};
}

int http_status(ApiErrorCode code) noexcept {
  switch (code) {
    case ApiErrorCode::not_found: return 404;
    case ApiErrorCode::invalid_request: return 400;
    case ApiErrorCode::conflict: return 409;
    case ApiErrorCode::internal: return 500;
  }
  return 500;
}

json to_json(const ApiError& e) {
  json out = {{"code", to_string(e.code)}, {"message", e.message}};
  if (!e.field_path.empty()) out["field_path"] = e.field_path;
  return out;
}

std::pair<std::string, int> parse_bind_address(const std::string& address) {
  std::string host = "127.0.0.1";
  std::string port_text = address;
  if (auto colon = address.rfind(':'); colon != std::string::npos) {
    host = address.substr(0, colon);
    port_text = address.substr(colon + 1);
  }
  int port = -1;
  const auto [end, ec] =
      std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || end != port_text.data() + port_text.size() || port < 0 ||
      port > 65535 || host.empty()) {
    throw Error(ErrorKind::parameter, "bind address must look like host:port", "bind");
  }
  return {host, port};
}

struct Service::Impl {
  Workspace workspace;
  std::shared_ptr<const SceneStore> store;
  httplib::Server server;
  bool bound = false;

  std::mutex locks_mutex;
  std::map<std::string, std::shared_ptr<std::mutex>> resource_locks;

  std::mutex runs_mutex;
  std::vector<std::jthread> runs;

  explicit Impl(std::filesystem::path dir)
      : workspace(std::move(dir)),
        store(std::make_shared<const SceneStore>(workspace.load_store())) {
    routes();
  }

  std::shared_ptr<std::mutex> lock_for(const std::string& key) {
    std::lock_guard lock(locks_mutex);
    auto& m = resource_locks[key];
    if (!m) m = std::make_shared<std::mutex>();
    return m;
  }

  template <typename Fn>
  httplib::Server::Handler wrap(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      auto fail = [&res](const ApiError& e) {
        res.status = http_status(e.code);
        res.set_content(to_json(e).dump(), std::string(kJson));
      };
      try {
        fn(req, res);
      } catch (const Error& e) {
        fail(to_api_error(e));
      } catch (const json::exception& e) {
        fail({ApiErrorCode::invalid_request, e.what(), {}});
      } catch (const std::exception& e) {
        fail({ApiErrorCode::internal, e.what(), {}});
      }
    };
  }

  static void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), std::string(kJson));
  }

  void routes() {
    server.Get("/acquisitions", wrap([this](const auto&, auto& res) {
      json out = json::array();
      for (const auto& a : store->acquisitions()) {
        out.push_back({{"acq", a.acquisition_id},
                       {"t_min", a.t_min},
                       {"t_max", a.t_max},
                       {"states", a.state_count}});
      }
      send_json(res, out);
    }));

    server.Get(R"(/acquisitions/([^/]+)/states)", wrap([this](const auto& req, auto& res) {
      const std::string acq = req.matches[1];
      if (!store->has_acquisition(acq)) {
        throw Error(ErrorKind::not_found, "no acquisition '" + acq + "'", "acq");
      }
      const auto& all = store->states_of(acq);
      const std::int64_t from = req.has_param("from") ? int_param(req, "from") : all.front().t;
      const std::int64_t to = req.has_param("to") ? int_param(req, "to") : all.back().t;
      json out = json::array();
      for (const auto& s : store->get_states(acq, from, to)) out.push_back(to_json(s));
      send_json(res, out);
    }));

    server.Post("/queries", wrap([this](const auto& req, auto& res) {
      const ScenarioQuery q = query_from_json(parse_body(req));
      send_json(res, to_json(execute_query(*store, q)));
    }));

    server.Post("/collections", wrap([this](const auto& req, auto& res) {
      const json body = parse_body(req);
      if (!body.is_object()) bad_request("expected an object", "$");
      Collection c;
      c.name = body.value("name", std::string{});
      c.collection_id = body.value("collection_id", c.name);
      if (!is_valid_collection_id(c.collection_id)) {
        bad_request("collection id must use [A-Za-z0-9._-]", "collection_id");
      }
      if (c.name.empty()) c.name = c.collection_id;
      auto lock = lock_for("collection:" + c.collection_id);
      std::lock_guard guard(*lock);
      if (workspace.has_collection(c.collection_id)) {
        throw Error(ErrorKind::conflict, "collection '" + c.collection_id + "' exists",
                    "collection_id");
      }
      workspace.save_collection(c);
      send_json(res, to_json(c), 201);
    }));

    server.Post(R"(/collections/([^/]+)/anchors)", wrap([this](const auto& req, auto& res) {
      const std::string id = req.matches[1];
      const json body = parse_body(req);
      std::vector<Anchor> anchors;
      if (body.is_object() && body.contains("anchors")) {
        const json& list = body.at("anchors");
        if (!list.is_array()) bad_request("expected an array", "anchors");
        for (std::size_t i = 0; i < list.size(); ++i) {
          anchors.push_back(anchor_from_json(list[i], "anchors[" + std::to_string(i) + "]"));
        }
      } else {
        anchors.push_back(anchor_from_json(body));
      }
      auto lock = lock_for("collection:" + id);
      std::lock_guard guard(*lock);
      Collection c = workspace.load_collection(id);
      for (const auto& a : anchors) {
        if (store->find(a.acquisition_id, a.t0) == nullptr) {
          bad_request("anchor (" + a.acquisition_id + ", " + std::to_string(a.t0) +
                          ") is not in the store",
                      "anchors");
        }
        for (const auto& existing : c.anchors) {
          if (existing.acquisition_id == a.acquisition_id && existing.t0 == a.t0) {
            throw Error(ErrorKind::conflict, "anchor already in collection", "anchors");
          }
        }
        c.anchors.push_back(a);
      }
      workspace.save_collection(c);
      send_json(res, to_json(c));
    }));

    server.Post(R"(/collections/([^/]+)/windows)", wrap([this](const auto& req, auto& res) {
      const std::string id = req.matches[1];
      const json body = parse_body(req);
      if (!body.is_object()) bad_request("expected an object", "$");
      const int k = body_int(body, "k", kDefaultPreSeconds);
      const int m = body_int(body, "m", kDefaultPostSeconds);
      auto lock = lock_for("collection:" + id);
      std::lock_guard guard(*lock);
      Collection c = workspace.load_collection(id);
      rebuild_windows(c, *store, k, m);
      workspace.save_collection(c);
      send_json(res, to_json(c));
    }));

    server.Get(R"(/collections/([^/]+))", wrap([this](const auto& req, auto& res) {
      send_json(res, to_json(workspace.load_collection(req.matches[1])));
    }));

    server.Post("/runs", wrap([this](const auto& req, auto& res) {
      const json body = parse_body(req);
      if (!body.is_object()) bad_request("expected an object", "$");
      if (!body.contains("collection_id") || !body["collection_id"].is_string()) {
        bad_request("missing collection_id", "collection_id");
      }
      const std::string collection_id = body["collection_id"].get<std::string>();
      std::vector<ModelSpec> models;
      const json spec = body.value("models", json());
      if (spec.is_string()) {
        std::filesystem::path p = spec.get<std::string>();
        if (p.is_relative()) p = workspace.root() / p;
        models = model_specs_from_json(read_json_file(p));
      } else if (spec.is_array() || spec.is_object()) {
        models = model_specs_from_json(spec);
      } else {
        bad_request("models must be inline specs or a file path", "models");
      }
      const bool images = body.value("include_images", true);
      const PromptSpec prompt =
          resolve_prompt_spec(body.value("prompt", std::string("fixed_standard")), images);
      RunOptions options;
      if (body.contains("parallel")) options.parallel = body_int(body, "parallel", 1);

      std::string run_id;
      {
        auto lock = lock_for("collection:" + collection_id);
        std::lock_guard guard(*lock);
        run_id = workspace.create_run(collection_id, models, prompt);
      }
      std::lock_guard guard(runs_mutex);
      runs.emplace_back([this, run_id, options] {
        try {
          workspace.execute_created_run(run_id, *store, options);
        } catch (const std::exception&) {
          // Recorded in the run status.
        }
      });
      send_json(res, {{"run_id", run_id}, {"state", "queued"}}, 202);
    }));

    server.Get(R"(/runs/([^/]+)/status)", wrap([this](const auto& req, auto& res) {
      send_json(res, to_json(workspace.run_status(req.matches[1])));
    }));

    server.Get(R"(/runs/([^/]+)/report)", wrap([this](const auto& req, auto& res) {
      res.set_content(workspace.report(req.matches[1]).report_json, std::string(kJson));
    }));

    server.Get(R"(/runs/([^/]+)/uncertainty)", wrap([this](const auto& req, auto& res) {
      res.set_content(workspace.report(req.matches[1]).csv.at("uncertainty.csv"), "text/csv");
    }));

    server.Get(R"(/runs/([^/]+)/heatmap)", wrap([this](const auto& req, auto& res) {
      res.set_content(workspace.report(req.matches[1]).csv.at("heatmap.csv"), "text/csv");
    }));

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      const ApiErrorCode code =
          res.status == 404 ? ApiErrorCode::not_found
                            : (res.status < 500 ? ApiErrorCode::invalid_request : ApiErrorCode::internal);
      res.set_content(to_json(ApiError{code, "no such endpoint or method", {}}).dump(),
                      std::string(kJson));
    });
  }
};

Service::Service(std::filesystem::path store_dir)
    : impl_(std::make_unique<Impl>(std::move(store_dir))) {}

Service::~Service() {
  stop();
  wait_for_runs();
}

int Service::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    throw Error(ErrorKind::io, "cannot bind " + host + ":" + std::to_string(port), "bind");
  }
  impl_->bound = true;
  return bound;
}

void Service::listen() {
  if (!impl_->bound) throw Error(ErrorKind::io, "listen called before bind", "bind");
  impl_->server.listen_after_bind();
}

void Service::stop() { impl_->server.stop(); }

void Service::wait_for_runs() {
  std::vector<std::jthread> done;
  {
    std::lock_guard guard(impl_->runs_mutex);
    done.swap(impl_->runs);
  }
  done.clear();
}

}  // namespace audit
