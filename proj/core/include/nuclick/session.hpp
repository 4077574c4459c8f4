#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nuclick/net.hpp"
#include "nuclick/postproc.hpp"
#include "nuclick/signals.hpp"

namespace nuclick::service {

using Model = std::shared_ptr<const NetworkParams<float>>;

/// Checkpoints found in one directory, keyed by file name. Loaded once, then read-only.
class ModelRegistry {
 public:
  ModelRegistry() = default;
  static ModelRegistry scan(const std::filesystem::path& dir);

  void add(const std::string& id, Model model);
  /// Throws NotFound.
  Model get(const std::string& id) const;
  bool contains(const std::string& id) const { return models_.count(id) > 0; }
  nlohmann::json list() const;

 private:
  std::map<std::string, Model> models_;
};

/// One entry of a session's append-only log.
struct Event {
  enum class Type { Create, Image, Add, Revise, Delete };
  Type type = Type::Create;
  std::uint64_t seq = 0;
  std::string request_id;
  std::string model;                    // Create
  std::shared_ptr<const RgbImage> image;  // Image
  std::string image_file;               // Image, relative to the session directory when persisted
  Label object_id = 0;                  // Revise, Delete
  GuideInput guide;                     // Add, Revise
};

nlohmann::json to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);

struct SessionObject {
  Label object_id = 0;
  GuideInput guide;
  ObjectResult result;

  bool empty() const;
  friend bool operator==(const SessionObject&, const SessionObject&) = default;
};

struct SessionState {
  std::string id;
  std::string model;
  std::optional<RgbImage> image;
  std::vector<SessionObject> objects;
  std::uint64_t revision = 0;
  Label next_object_id = 1;

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

/// Annotation session. All mutations append an event; state is a pure function of the log.
/// Public methods are serialised by a per-session mutex.
class Session {
 public:
  /// `dir` empty = in-memory only.
  Session(std::string id, std::string model_id, Model model, std::filesystem::path dir = {});

  /// Rebuilds a session from its log (the first event must be Create).
  static std::unique_ptr<Session> replay(std::string id, const std::vector<Event>& events, Model model);
  /// Loads <dir>/events.jsonl (and referenced images).
  static std::unique_ptr<Session> open(const std::filesystem::path& dir, const ModelRegistry& models);

  const std::string& id() const { return id_; }
  const std::string& model_id() const { return model_id_; }

  nlohmann::json set_image(const RgbImage& image, const std::string& request_id = {});
  nlohmann::json add(const GuideInput& guide, const std::string& request_id = {});
  nlohmann::json revise(Label object_id, const GuideInput& guide, const std::string& request_id = {});
  nlohmann::json remove(Label object_id, const std::string& request_id = {});
  /// Drops the last mutation and rebuilds the state by replaying the rest. Conflict when nothing to undo.
  nlohmann::json undo();

  SessionState state() const;
  std::vector<Event> events() const;
  nlohmann::json state_json() const;
  LabelMap label_map() const;
  /// {"width", "height", "objects": [{"object_id", "rle"}]} from the assembled label map.
  nlohmann::json export_json() const;

 private:
  nlohmann::json mutate(Event e);
  nlohmann::json apply(const Event& e);
  void rebuild();
  void append_to_disk(const Event& e);
  void rewrite_disk();
  nlohmann::json object_json(const SessionObject& o) const;
  std::vector<Point> anchors_except(Label object_id) const;
  const RgbImage& require_image() const;
  ObjectResult run(const GuideInput& guide, Label object_id, const std::vector<Point>& others) const;

  std::string id_;
  std::string model_id_;
  Model model_;
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::vector<Event> log_;
  SessionState state_;
  std::map<std::string, nlohmann::json> responses_;  // request id -> first response
};

/// All live sessions; ids are random 16-hex-digit strings.
class SessionStore {
 public:
  explicit SessionStore(ModelRegistry models, std::filesystem::path data_dir = {});

  /// Throws NotFound for an unknown model. The same request id returns the same session.
  std::string create(const std::string& model_id, const std::string& request_id = {});
  /// Throws NotFound.
  std::shared_ptr<Session> get(const std::string& id) const;
  std::vector<std::string> list() const;
  const ModelRegistry& models() const { return models_; }

 private:
  ModelRegistry models_;
  std::filesystem::path data_dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::string> created_;  // request id -> session id
  Rng id_rng_;
};

}  // namespace nuclick::service
