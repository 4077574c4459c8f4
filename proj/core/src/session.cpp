#include "nuclick/session.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "nuclick/checkpoint.hpp"
#include "nuclick/pipeline.hpp"
#include "nuclick/png_io.hpp"

namespace nuclick::service {

namespace {

constexpr std::uint64_t kSnapshotEvery = 16;

const char* type_name(Event::Type t) {
  switch (t) {
    case Event::Type::Create: return "create";
    case Event::Type::Image: return "image";
    case Event::Type::Add: return "add";
    case Event::Type::Revise: return "revise";
    case Event::Type::Delete: return "delete";
  }
  return "create";
}

Event::Type parse_type(const std::string& s) {
  if (s == "create") return Event::Type::Create;
  if (s == "image") return Event::Type::Image;
  if (s == "add") return Event::Type::Add;
  if (s == "revise") return Event::Type::Revise;
  if (s == "delete") return Event::Type::Delete;
  throw InvalidInput("unknown event type: " + s);
}

nlohmann::json patch_json(const PatchSpec& p) {
  return {{"origin", {p.origin.x, p.origin.y}}, {"size", {p.size.width, p.size.height}}, {"scale", {p.scale_x, p.scale_y}}};
}

PatchSpec patch_from_json(const nlohmann::json& j) {
  PatchSpec p;
  p.origin = {j["origin"][0].get<int>(), j["origin"][1].get<int>()};
  p.size = {j["size"][0].get<int>(), j["size"][1].get<int>()};
  p.scale_x = j["scale"][0].get<double>();
  p.scale_y = j["scale"][1].get<double>();
  return p;
}

}  // namespace

ModelRegistry ModelRegistry::scan(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("model directory not found: " + dir.string());
  ModelRegistry r;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".nuck") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) r.add(f.filename().string(), std::make_shared<const NetworkParams<float>>(checkpoint::load(f)));
  return r;
}

void ModelRegistry::add(const std::string& id, Model model) {
  if (!model) throw InvalidInput("model registry: null model");
  models_[id] = std::move(model);
}

Model ModelRegistry::get(const std::string& id) const {
  const auto it = models_.find(id);
  if (it == models_.end()) throw NotFound("unknown model: " + id);
  return it->second;
}

nlohmann::json ModelRegistry::list() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [id, m] : models_) {
    out.push_back({{"id", id},
                   {"kind", to_string(m->config.kind)},
                   {"patch_size", m->config.patch_size},
                   {"use_exclusion", m->config.use_exclusion}});
  }
  return out;
}

nlohmann::json to_json(const Event& e) {
  nlohmann::json j{{"seq", e.seq}, {"type", type_name(e.type)}};
  if (!e.request_id.empty()) j["request_id"] = e.request_id;
  switch (e.type) {
    case Event::Type::Create: j["model"] = e.model; break;
    case Event::Type::Image: j["image_file"] = e.image_file; break;
    case Event::Type::Add: j["guide"] = pipeline::to_json(e.guide); break;
    case Event::Type::Revise:
      j["object_id"] = e.object_id;
      j["guide"] = pipeline::to_json(e.guide);
      break;
    case Event::Type::Delete: j["object_id"] = e.object_id; break;
  }
  return j;
}

Event event_from_json(const nlohmann::json& j) {
  Event e;
  try {
    e.seq = j.at("seq").get<std::uint64_t>();
    e.type = parse_type(j.at("type").get<std::string>());
    e.request_id = j.value("request_id", "");
    e.model = j.value("model", "");
    e.image_file = j.value("image_file", "");
    e.object_id = j.value("object_id", Label{0});
    if (j.contains("guide")) e.guide = pipeline::guide_from_json(j["guide"]);
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidInput(std::string("malformed event: ") + ex.what());
  }
  return e;
}

bool SessionObject::empty() const { return count_foreground(result.mask) == 0; }

Session::Session(std::string id, std::string model_id, Model model, std::filesystem::path dir)
    : id_(std::move(id)), model_id_(std::move(model_id)), model_(std::move(model)), dir_(std::move(dir)) {
  if (!model_) throw InvalidInput("session: null model");
  Event create;
  create.type = Event::Type::Create;
  create.model = model_id_;
  state_.id = id_;
  state_.model = model_id_;
  log_.push_back(create);
  if (!dir_.empty()) rewrite_disk();
}

std::unique_ptr<Session> Session::replay(std::string id, const std::vector<Event>& events, Model model) {
  if (events.empty() || events.front().type != Event::Type::Create) throw InvalidInput("replay: log must start with create");
  auto s = std::make_unique<Session>(std::move(id), events.front().model, std::move(model));
  s->log_ = events;
  s->rebuild();
  return s;
}

std::unique_ptr<Session> Session::open(const std::filesystem::path& dir, const ModelRegistry& models) {
  std::ifstream in(dir / "events.jsonl");
  if (!in) throw IoError("cannot read session log in " + dir.string());
  std::vector<Event> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Event e = event_from_json(nlohmann::json::parse(line));
    if (e.type == Event::Type::Image) e.image = std::make_shared<const RgbImage>(png::read_rgb(dir / e.image_file));
    events.push_back(std::move(e));
  }
  if (events.empty()) throw IoError("empty session log in " + dir.string());
  auto s = std::make_unique<Session>(dir.filename().string(), events.front().model, models.get(events.front().model));
  s->log_ = std::move(events);

  // Resume from the snapshot when it is consistent with the log, replaying only the tail.
  const auto snap_path = dir / "snapshot.json";
  bool restored = false;
  if (std::filesystem::exists(snap_path)) {
    try {
      std::ifstream sin(snap_path);
      const auto snap = nlohmann::json::parse(sin);
      const auto seq = snap.at("seq").get<std::uint64_t>();
      if (seq < s->log_.size() && s->log_[seq].seq == seq) {
        SessionState st;
        st.id = s->id_;
        st.model = s->model_id_;
        st.revision = snap.at("revision").get<std::uint64_t>();
        st.next_object_id = snap.at("next_object_id").get<Label>();
        if (!snap.at("image_file").get<std::string>().empty()) st.image = png::read_rgb(dir / snap["image_file"].get<std::string>());
        for (const auto& o : snap.at("objects")) {
          SessionObject obj;
          obj.object_id = o.at("object_id").get<Label>();
          obj.guide = pipeline::guide_from_json(o.at("guide"));
          obj.result.patch = patch_from_json(o.at("patch"));
          obj.result.mask = postproc::rle_decode(o.at("patch_rle").get<std::vector<std::uint32_t>>(), obj.result.patch.size);
          obj.result.object_id = obj.object_id;
          st.objects.push_back(std::move(obj));
        }
        s->state_ = std::move(st);
        s->responses_ = snap.at("responses").get<std::map<std::string, nlohmann::json>>();
        for (std::size_t i = seq + 1; i < s->log_.size(); ++i) {
          auto response = s->apply(s->log_[i]);
          if (!s->log_[i].request_id.empty()) s->responses_.emplace(s->log_[i].request_id, std::move(response));
        }
        restored = true;
      }
    } catch (const std::exception&) {
      restored = false;
    }
  }
  if (!restored) s->rebuild();
  s->dir_ = dir;
  return s;
}

const RgbImage& Session::require_image() const {
  if (!state_.image) throw Conflict("session has no image yet");
  return *state_.image;
}

std::vector<Point> Session::anchors_except(Label object_id) const {
  std::vector<Point> out;
  for (const auto& o : state_.objects) {
    if (o.object_id != object_id) out.push_back(o.guide.anchor());
  }
  return out;
}

ObjectResult Session::run(const GuideInput& guide, Label object_id, const std::vector<Point>& others) const {
  return pipeline::segment_one(*model_, require_image(), {guide, others, object_id});
}

nlohmann::json Session::object_json(const SessionObject& o) const {
  const BinaryMask mask = postproc::to_image_space(o.result, state_.image->size());
  return {{"object_id", o.object_id},
          {"guide", pipeline::to_json(o.guide)},
          {"rle", postproc::rle_encode(mask)},
          {"status", o.empty() ? "empty-result" : "ok"}};
}

// Applies one event to state_ and returns the response it produces. Validation happens
// before any state change, so a throwing event leaves the session untouched.
nlohmann::json Session::apply(const Event& e) {
  switch (e.type) {
    case Event::Type::Create:
      state_ = SessionState{};
      state_.id = id_;
      state_.model = model_id_;
      return {{"session_id", id_}, {"model", model_id_}, {"revision", state_.revision}};
    case Event::Type::Image: {
      if (!e.image || e.image->empty()) throw InvalidInput("image is empty");
      state_.image = *e.image;
      state_.objects.clear();
      ++state_.revision;
      return {{"width", state_.image->width()}, {"height", state_.image->height()}, {"revision", state_.revision}};
    }
    case Event::Type::Add: {
      const RgbImage& image = require_image();
      pipeline::validate_guide(e.guide, image.size());
      SessionObject o{state_.next_object_id, e.guide, {}};
      o.result = run(e.guide, o.object_id, anchors_except(0));
      state_.objects.push_back(std::move(o));
      ++state_.next_object_id;
      ++state_.revision;
      auto j = object_json(state_.objects.back());
      j["revision"] = state_.revision;
      return j;
    }
    case Event::Type::Revise: {
      const RgbImage& image = require_image();
      auto it = std::find_if(state_.objects.begin(), state_.objects.end(), [&](const auto& o) { return o.object_id == e.object_id; });
      if (it == state_.objects.end()) throw NotFound("unknown object " + std::to_string(e.object_id));
      pipeline::validate_guide(e.guide, image.size());
      ObjectResult r = run(e.guide, e.object_id, anchors_except(e.object_id));
      it->guide = e.guide;
      it->result = std::move(r);
      ++state_.revision;
      auto j = object_json(*it);
      j["revision"] = state_.revision;
      return j;
    }
    case Event::Type::Delete: {
      auto it = std::find_if(state_.objects.begin(), state_.objects.end(), [&](const auto& o) { return o.object_id == e.object_id; });
      if (it == state_.objects.end()) throw NotFound("unknown object " + std::to_string(e.object_id));
      state_.objects.erase(it);
      ++state_.revision;
      return {{"object_id", e.object_id}, {"revision", state_.revision}};
    }
  }
  return {};
}

void Session::rebuild() {
  state_ = SessionState{};
  responses_.clear();
  for (const auto& e : log_) {
    auto response = apply(e);
    if (!e.request_id.empty()) responses_.emplace(e.request_id, std::move(response));
  }
}

void Session::append_to_disk(const Event& e) {
  if (dir_.empty()) return;
  std::ofstream out(dir_ / "events.jsonl", std::ios::app);
  if (!out) throw IoError("cannot append to session log in " + dir_.string());
  out << to_json(e).dump() << '\n';
  out.flush();
  if (e.seq % kSnapshotEvery == 0) {
    nlohmann::json snap{{"seq", e.seq},
                        {"revision", state_.revision},
                        {"next_object_id", state_.next_object_id},
                        {"responses", responses_}};
    std::string image_file;
    for (auto it = log_.rbegin(); it != log_.rend(); ++it) {
      if (it->type == Event::Type::Image) {
        image_file = it->image_file;
        break;
      }
    }
    snap["image_file"] = state_.image ? image_file : "";
    snap["objects"] = nlohmann::json::array();
    for (const auto& o : state_.objects) {
      snap["objects"].push_back({{"object_id", o.object_id},
                                 {"guide", pipeline::to_json(o.guide)},
                                 {"patch", patch_json(o.result.patch)},
                                 {"patch_rle", postproc::rle_encode(o.result.mask)}});
    }
    const auto tmp = dir_ / "snapshot.json.tmp";
    {
      std::ofstream s(tmp, std::ios::trunc);
      s << snap.dump() << '\n';
    }
    std::filesystem::rename(tmp, dir_ / "snapshot.json");
  }
}

void Session::rewrite_disk() {
  std::filesystem::create_directories(dir_);
  std::filesystem::remove(dir_ / "snapshot.json");
  std::ofstream out(dir_ / "events.jsonl", std::ios::trunc);
  if (!out) throw IoError("cannot write session log in " + dir_.string());
  for (const auto& e : log_) out << to_json(e).dump() << '\n';
}

nlohmann::json Session::mutate(Event e) {
  if (!e.request_id.empty()) {
    const auto it = responses_.find(e.request_id);
    if (it != responses_.end()) return it->second;
  }
  e.seq = log_.size();
  if (e.type == Event::Type::Image && !dir_.empty()) {
    e.image_file = "images/" + std::to_string(e.seq) + ".png";
    png::write_rgb(dir_ / e.image_file, *e.image);
  }
  const SessionState before = state_;
  nlohmann::json response;
  try {
    response = apply(e);
  } catch (...) {
    state_ = before;
    throw;
  }
  log_.push_back(e);
  if (!e.request_id.empty()) responses_.emplace(e.request_id, response);
  append_to_disk(log_.back());
  return response;
}

nlohmann::json Session::set_image(const RgbImage& image, const std::string& request_id) {
  std::lock_guard lock(mutex_);
  Event e;
  e.type = Event::Type::Image;
  e.request_id = request_id;
  e.image = std::make_shared<const RgbImage>(image);
  return mutate(std::move(e));
}

nlohmann::json Session::add(const GuideInput& guide, const std::string& request_id) {
  std::lock_guard lock(mutex_);
  Event e;
  e.type = Event::Type::Add;
  e.request_id = request_id;
  e.guide = guide;
  return mutate(std::move(e));
}

nlohmann::json Session::revise(Label object_id, const GuideInput& guide, const std::string& request_id) {
  std::lock_guard lock(mutex_);
  Event e;
  e.type = Event::Type::Revise;
  e.request_id = request_id;
  e.object_id = object_id;
  e.guide = guide;
  return mutate(std::move(e));
}

nlohmann::json Session::remove(Label object_id, const std::string& request_id) {
  std::lock_guard lock(mutex_);
  Event e;
  e.type = Event::Type::Delete;
  e.request_id = request_id;
  e.object_id = object_id;
  return mutate(std::move(e));
}

nlohmann::json Session::undo() {
  std::lock_guard lock(mutex_);
  if (log_.size() <= 1) throw Conflict("nothing to undo");
  log_.pop_back();
  rebuild();
  if (!dir_.empty()) rewrite_disk();
  nlohmann::json j{{"revision", state_.revision}, {"objects", nlohmann::json::array()}};
  if (state_.image) {
    for (const auto& o : state_.objects) j["objects"].push_back(object_json(o));
  }
  return j;
}

SessionState Session::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

std::vector<Event> Session::events() const {
  std::lock_guard lock(mutex_);
  return log_;
}

nlohmann::json Session::state_json() const {
  std::lock_guard lock(mutex_);
  nlohmann::json j{{"session_id", id_}, {"model", model_id_}, {"revision", state_.revision}};
  j["image"] = state_.image ? nlohmann::json{{"width", state_.image->width()}, {"height", state_.image->height()}} : nlohmann::json();
  j["objects"] = nlohmann::json::array();
  if (state_.image) {
    for (const auto& o : state_.objects) j["objects"].push_back(object_json(o));
  }
  return j;
}

LabelMap Session::label_map() const {
  std::lock_guard lock(mutex_);
  if (!state_.image) return LabelMap();
  std::vector<ObjectResult> results;
  for (const auto& o : state_.objects) results.push_back(o.result);
  return postproc::assemble(results, state_.image->size());
}

nlohmann::json Session::export_json() const {
  const LabelMap labels = label_map();
  return {{"width", labels.width()}, {"height", labels.height()}, {"objects", postproc::label_map_rle(labels)}};
}

SessionStore::SessionStore(ModelRegistry models, std::filesystem::path data_dir)
    : models_(std::move(models)), data_dir_(std::move(data_dir)), id_rng_(std::random_device{}()) {
  if (data_dir_.empty() || !std::filesystem::is_directory(data_dir_)) return;
  for (const auto& e : std::filesystem::directory_iterator(data_dir_)) {
    if (!e.is_directory() || !std::filesystem::exists(e.path() / "events.jsonl")) continue;
    std::shared_ptr<Session> s = Session::open(e.path(), models_);
    sessions_[s->id()] = std::move(s);
  }
}

std::string SessionStore::create(const std::string& model_id, const std::string& request_id) {
  Model model = models_.get(model_id);
  std::unique_lock lock(mutex_);
  if (!request_id.empty()) {
    const auto it = created_.find(request_id);
    if (it != created_.end()) return it->second;
  }
  std::string id;
  do {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << id_rng_();
    id = os.str();
  } while (sessions_.count(id));
  const auto dir = data_dir_.empty() ? std::filesystem::path() : data_dir_ / id;
  sessions_[id] = std::make_shared<Session>(id, model_id, std::move(model), dir);
  if (!request_id.empty()) created_[request_id] = id;
  return id;
}

std::shared_ptr<Session> SessionStore::get(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFound("unknown session: " + id);
  return it->second;
}

std::vector<std::string> SessionStore::list() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

}  // namespace nuclick::service
