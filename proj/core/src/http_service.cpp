#include "nuclick/http_service.hpp"

#include <httplib.h>

#include "nuclick/pipeline.hpp"
#include "nuclick/png_io.hpp"

namespace nuclick::service {

struct HttpService::Impl {
  SessionStore& store;
  httplib::Server server;

  explicit Impl(SessionStore& s) : store(s) {}
};

namespace {

void send_json(httplib::Response& res, const nlohmann::json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("malformed JSON: ") + e.what());
  }
}

std::string request_id(const httplib::Request& req, const nlohmann::json& body = {}) {
  if (req.has_header("Idempotency-Key")) return req.get_header_value("Idempotency-Key");
  if (body.is_object() && body.contains("request_id") && body["request_id"].is_string()) return body["request_id"].get<std::string>();
  return {};
}

Label object_id(const std::string& s) {
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(s, &used);
    if (used == s.size() && v > 0 && v <= 0xFFFFFFFFul) return static_cast<Label>(v);
  } catch (const std::exception&) {
  }
  throw NotFound("unknown object " + s);
}

GuideInput guide_of(const nlohmann::json& body) {
  // Accept either the guide itself or {"guide": {...}, "request_id": ...}.
  return pipeline::guide_from_json(body.contains("guide") ? body["guide"] : body);
}

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const InvalidInput& e) {
      send_json(res, {{"error", e.what()}}, 400);
    } catch (const InvalidConfig& e) {
      send_json(res, {{"error", e.what()}}, 400);
    } catch (const NotFound& e) {
      send_json(res, {{"error", e.what()}}, 404);
    } catch (const Conflict& e) {
      send_json(res, {{"error", e.what()}}, 409);
    } catch (const std::exception& e) {
      send_json(res, {{"error", e.what()}}, 500);
    }
  };
}

}  // namespace

HttpService::HttpService(SessionStore& store) : impl_(std::make_unique<Impl>(store)) {
  auto& srv = impl_->server;
  SessionStore& st = store;

  srv.Post("/api/sessions", guarded([&st](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    if (!body.contains("model") || !body["model"].is_string()) throw InvalidInput("body needs a \"model\" string");
    const std::string id = st.create(body["model"].get<std::string>(), request_id(req, body));
    const auto session = st.get(id);
    send_json(res, {{"session_id", id}, {"model", session->model_id()}, {"revision", session->state().revision}}, 201);
  }));

  srv.Get("/api/sessions", guarded([&st](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"sessions", st.list()}});
  }));

  srv.Get(R"(/api/sessions/([0-9a-f]+))", guarded([&st](const httplib::Request& req, httplib::Response& res) {
    send_json(res, st.get(req.matches[1])->state_json());
  }));

  srv.Put(R"(/api/sessions/([0-9a-f]+)/image)", guarded([&st](const httplib::Request& req, httplib::Response& res) {
    const auto session = st.get(req.matches[1]);
    const png::Bytes bytes(req.body.begin(), req.body.end());
    send_json(res, session->set_image(png::decode_rgb(bytes), request_id(req)));
  }));

  srv.Post(R"(/api/sessions/([0-9a-f]+)/objects)", guarded([&st](const httplib::Request& req, httplib::Response& res) {
    const auto session = st.get(req.matches[1]);
    const auto body = parse_body(req);
    send_json(res, session->add(guide_of(body), request_id(req, body)), 201);
  }));

  srv.Patch(R"(/api/sessions/([0-9a-f]+)/objects/([0-9]+))", guarded([&st](const httplib::Request& req, httplib::Response& res) {
    const auto session = st.get(req.matches[1]);
    const auto body = parse_body(req);
    send_json(res, session->revise(object_id(req.matches[2]), guide_of(body), request_id(req, body)));
  }));

  srv.Delete(R"(/api/sessions/([0-9a-f]+)/objects/([0-9]+))", guarded([&st](const httplib::Request& req, httplib::Response& res) {
    const auto session = st.get(req.matches[1]);
    send_json(res, session->remove(object_id(req.matches[2]), request_id(req)));
  }));

  srv.Post(R"(/api/sessions/([0-9a-f]+)/undo)", guarded([&st](const httplib::Request& req, httplib::Response& res) {
    send_json(res, st.get(req.matches[1])->undo());
  }));

  srv.Get(R"(/api/sessions/([0-9a-f]+)/labelmap)", guarded([&st](const httplib::Request& req, httplib::Response& res) {
    const LabelMap labels = st.get(req.matches[1])->label_map();
    if (labels.empty()) throw Conflict("session has no image yet");
    const auto bytes = png::encode_labels(labels);
    res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
  }));

  srv.Get(R"(/api/sessions/([0-9a-f]+)/export)", guarded([&st](const httplib::Request& req, httplib::Response& res) {
    send_json(res, st.get(req.matches[1])->export_json());
  }));

  srv.Get("/api/models", guarded([&st](const httplib::Request&, httplib::Response& res) { send_json(res, st.models().list()); }));
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpService::serve() { return impl_->server.listen_after_bind(); }

void HttpService::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void HttpService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace nuclick::service
