#include "vlnpilot/simserve.hpp"

#include <boost/asio.hpp>
#include <nlohmann/json.hpp>

#include <sys/socket.h>

#include <atomic>
#include <charconv>
#include <list>
#include <mutex>
#include <thread>

namespace vlnpilot {

namespace asio = boost::asio;
using asio::ip::tcp;
using nlohmann::json;

namespace {

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

void write_line(tcp::socket& s, const json& j) {
  std::string line = dump(j);
  line += '\n';
  asio::write(s, asio::buffer(line));
}

/// Reads one '\n'-terminated line. Returns false on clean EOF before any byte.
bool read_line(tcp::socket& s, asio::streambuf& buf, std::string& line) {
  boost::system::error_code ec;
  const std::size_t n = asio::read_until(s, buf, '\n', ec);
  if (ec == asio::error::not_found) throw std::length_error("line exceeds 8 MiB");
  if (ec) {
    if (ec == asio::error::eof && buf.size() == 0) return false;
    throw boost::system::system_error(ec);
  }
  line.assign(asio::buffers_begin(buf.data()), asio::buffers_begin(buf.data()) + static_cast<std::ptrdiff_t>(n - 1));
  buf.consume(n);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

json obs_json(const std::string& session, int step, const Observation& obs, const StepResult* sr) {
  json j = {{"kind", "obs"},     {"session", session}, {"step", step},   {"x", obs.x},
            {"y", obs.y},        {"z", obs.z},         {"yaw", obs.yaw}, {"collided", obs.collided},
            {"traveled", sr ? sr->traveled : 0.0}};
  if (sr && sr->contact)
    j["contact"] = {{"id", sr->contact->obstacle_id}, {"x", sr->contact->point.x()}, {"z", sr->contact->point.y()}};
  else
    j["contact"] = nullptr;
  if (obs.frames)
    j["frames"] = {{"front", base64_encode(obs.frames->front_png)}, {"rear", base64_encode(obs.frames->rear_png)}};
  return j;
}

struct MalformedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace

HostPort parse_host_port(std::string_view s) {
  const auto colon = s.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == s.size())
    throw std::invalid_argument("expected HOST:PORT, got '" + std::string(s) + "'");
  unsigned port = 0;
  const auto tail = s.substr(colon + 1);
  const auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), port);
  if (ec != std::errc() || p != tail.data() + tail.size() || port > 65535)
    throw std::invalid_argument("bad port in '" + std::string(s) + "'");
  return {std::string(s.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

// ---------------------------------------------------------------- server

struct SimServer::Impl {
  std::shared_ptr<const FloorPlan> plan;
  SimConfig sim;
  CameraModel camera;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::atomic<bool> stopping{false};
  std::atomic<int> next_session{1};
  std::thread accept_thread;

  struct Conn {
    std::shared_ptr<tcp::socket> socket;
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  std::mutex mu;
  std::list<Conn> conns;

  void accept_loop() {
    while (!stopping) {
      auto sock = std::make_shared<tcp::socket>(io);
      boost::system::error_code ec;
      acceptor.accept(*sock, ec);
      if (ec) {
        if (stopping || ec == asio::error::bad_descriptor || ec == asio::error::operation_aborted) break;
        continue;
      }
      std::lock_guard lock(mu);
      reap();
      if (stopping) break;
      auto done = std::make_shared<std::atomic<bool>>(false);
      conns.push_back({sock, std::thread([this, sock, done] {
                         serve_connection(*sock);
                         boost::system::error_code ignored;
                         sock->shutdown(tcp::socket::shutdown_both, ignored);
                         *done = true;
                       }),
                       done});
    }
  }

  /// Joins finished connection threads. Caller holds `mu`.
  void reap() {
    for (auto it = conns.begin(); it != conns.end();) {
      if (*it->done) {
        it->thread.join();
        it = conns.erase(it);
      } else {
        ++it;
      }
    }
  }

  void serve_connection(tcp::socket& s) {
    asio::streambuf buf(kMaxLineBytes + 1);
    std::unique_ptr<Simulator> simulator;
    std::string session;
    int step = 0;
    bool act_pending_before_obs = false;

    auto error = [&](const std::string& msg) {
      write_line(s, {{"kind", "error"}, {"session", session}, {"message", msg}});
    };

    try {
      std::string line;
      while (read_line(s, buf, line)) {
        const bool was_pipelined = act_pending_before_obs;
        act_pending_before_obs = false;
        json msg;
        std::string kind;
        try {
          msg = json::parse(line);
          if (!msg.is_object()) throw MalformedError("not an object");
          if (!msg.contains("kind") || !msg["kind"].is_string()) throw MalformedError("missing kind");
          if (!msg.contains("session") || !msg["session"].is_string())
            throw MalformedError("missing session");
          kind = msg["kind"].get<std::string>();
        } catch (const std::exception& e) {
          error(std::string("malformed: ") + e.what());
          return;
        }

        if (kind == "hello") {
          if (simulator) {
            error("session already started");
            continue;
          }
          DronePose spawn;
          bool frames = false;
          try {
            const json& p = msg.at("spawn");
            spawn = {p.at("x").get<double>(), p.at("y").get<double>(), p.at("z").get<double>(),
                     p.at("yaw").get<double>()};
            frames = msg.value("frames", false);
            if (msg.value("v", kProtocolVersion) != kProtocolVersion) {
              error("unsupported protocol version " + msg["v"].dump());
              return;
            }
          } catch (const json::exception& e) {
            error(std::string("malformed: ") + e.what());
            return;
          }
          session = "s" + std::to_string(next_session++);
          simulator = std::make_unique<Simulator>(plan, sim, frames ? make_frame_renderer(camera) : FrameRenderer{});
          Observation obs;
          try {
            obs = simulator->reset(spawn);
          } catch (const StartInCollisionError& e) {
            error(std::string("start in collision: ") + e.what());
            return;
          }
          write_line(s, obs_json(session, step, obs, nullptr));
        } else if (kind == "act") {
          if (!simulator) {
            error("no session");
            continue;
          }
          if (msg["session"].get<std::string>() != session) {
            error("unknown session '" + msg["session"].get<std::string>() + "'");
            continue;
          }
          if (was_pipelined) {
            error("act without intervening obs");
            continue;
          }
          const std::string code = msg.value("command", "");
          const auto cmd = parse_command(code);
          if (!cmd) {
            error("unknown command '" + code + "'");
            continue;
          }
          const StepResult sr = simulator->step(*cmd);
          ++step;
          const Observation obs = simulator->observe();
          act_pending_before_obs = buf.size() > 0 || s.available() > 0;
          write_line(s, obs_json(session, step, obs, &sr));
          if (sr.collided) {
            write_line(s, {{"kind", "result"}, {"session", session}, {"reason", "collision"}, {"steps", step}});
            return;
          }
        } else if (kind == "bye") {
          write_line(s, {{"kind", "result"}, {"session", session}, {"reason", "bye"}, {"steps", step}});
          return;
        } else {
          error("unknown kind '" + kind + "'");
        }
      }
    } catch (const std::length_error& e) {
      try {
        error(std::string("malformed: ") + e.what());
      } catch (...) {
      }
    } catch (const std::exception&) {
      // Peer went away or the server is stopping.
    }
  }
};

SimServer::SimServer(std::shared_ptr<const FloorPlan> plan, SimConfig sim, CameraModel camera,
                     const HostPort& bind)
    : impl_(std::make_unique<Impl>()) {
  impl_->plan = std::move(plan);
  impl_->sim = sim;
  impl_->camera = camera;
  const tcp::endpoint ep(asio::ip::make_address(bind.host), bind.port);
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen();
}

SimServer::~SimServer() { stop(); }

std::uint16_t SimServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void SimServer::start() {
  impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

void SimServer::run() { impl_->accept_loop(); }

void SimServer::stop() {
  if (impl_->stopping.exchange(true)) return;
  // shutdown() on the raw descriptors wakes threads blocked in accept/read.
  ::shutdown(impl_->acceptor.native_handle(), SHUT_RDWR);
  {
    std::lock_guard lock(impl_->mu);
    for (auto& c : impl_->conns) ::shutdown(c.socket->native_handle(), SHUT_RDWR);
  }
  if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
  std::lock_guard lock(impl_->mu);
  for (auto& c : impl_->conns) c.thread.join();
  impl_->conns.clear();
  boost::system::error_code ec;
  impl_->acceptor.close(ec);
}

// ---------------------------------------------------------------- client

struct RemoteSession::Conn {
  asio::io_context io;
  tcp::socket socket{io};
  asio::streambuf buf{kMaxLineBytes + 1};
  bool open = false;

  json request(const json& msg) {
    try {
      write_line(socket, msg);
      return receive();
    } catch (const boost::system::system_error& e) {
      open = false;
      throw RemoteError(std::string("transport: ") + e.what());
    }
  }

  json receive() {
    std::string line;
    try {
      if (!read_line(socket, buf, line)) {
        open = false;
        throw RemoteError("transport: connection closed by server");
      }
    } catch (const boost::system::system_error& e) {
      open = false;
      throw RemoteError(std::string("transport: ") + e.what());
    } catch (const std::length_error& e) {
      open = false;
      throw RemoteError(std::string("protocol desync: ") + e.what());
    }
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("kind"))
      throw RemoteError("protocol desync: unparseable line from server");
    return j;
  }
};

namespace {

Observation obs_from(const json& j) {
  Observation o;
  o.x = j.at("x").get<double>();
  o.y = j.at("y").get<double>();
  o.z = j.at("z").get<double>();
  o.yaw = j.at("yaw").get<double>();
  o.collided = j.at("collided").get<bool>();
  if (j.contains("frames") && j["frames"].is_object()) {
    Frames f;
    f.front_png = base64_decode(j["frames"].at("front").get<std::string>());
    f.rear_png = base64_decode(j["frames"].at("rear").get<std::string>());
    o.frames = std::move(f);
  }
  return o;
}

void expect_obs(const json& j) {
  const std::string kind = j.value("kind", "");
  if (kind == "obs") return;
  if (kind == "error") {
    const std::string msg = j.value("message", "");
    if (msg.rfind("start in collision", 0) == 0) throw StartInCollisionError(msg);
    throw RemoteError("server error: " + msg);
  }
  throw RemoteError("protocol desync: expected obs, got '" + kind + "'");
}

}  // namespace

RemoteSession::RemoteSession(HostPort server, bool frames)
    : conn_(std::make_unique<Conn>()), server_(std::move(server)), frames_(frames) {}

RemoteSession::~RemoteSession() {
  try {
    close();
  } catch (...) {
  }
}

void RemoteSession::close() {
  if (!conn_->open) return;
  conn_->open = false;
  try {
    write_line(conn_->socket, {{"kind", "bye"}, {"session", session_}});
    conn_->receive();
  } catch (...) {
  }
  boost::system::error_code ec;
  conn_->socket.close(ec);
}

Observation RemoteSession::reset(const DronePose& spawn) {
  close();
  conn_ = std::make_unique<Conn>();
  try {
    tcp::resolver resolver(conn_->io);
    asio::connect(conn_->socket, resolver.resolve(server_.host, std::to_string(server_.port)));
  } catch (const boost::system::system_error& e) {
    throw RemoteError("cannot connect to " + server_.host + ":" + std::to_string(server_.port) + ": " +
                      e.what());
  }
  conn_->open = true;
  const json hello = {{"kind", "hello"},
                      {"session", ""},
                      {"v", kProtocolVersion},
                      {"frames", frames_},
                      {"spawn", {{"x", spawn.x}, {"y", spawn.y}, {"z", spawn.z}, {"yaw", spawn.yaw}}}};
  const json reply = conn_->request(hello);
  expect_obs(reply);
  session_ = reply.at("session").get<std::string>();
  last_ = obs_from(reply);
  return last_;
}

StepResult RemoteSession::step(MotionCommand cmd) {
  if (!conn_->open) throw RemoteError("no open session");
  const json reply = conn_->request({{"kind", "act"}, {"session", session_}, {"command", to_string(cmd)}});
  expect_obs(reply);
  last_ = obs_from(reply);
  StepResult r;
  r.pose = last_.pose();
  r.collided = last_.collided;
  r.traveled = reply.at("traveled").get<double>();
  if (reply.contains("contact") && reply["contact"].is_object()) {
    const json& c = reply["contact"];
    r.contact = Contact{c.at("id").get<std::string>(), Vec2(c.at("x").get<double>(), c.at("z").get<double>())};
  }
  if (r.collided) {
    // The server closes the session after a collision.
    try {
      conn_->receive();
    } catch (const RemoteError&) {
    }
    conn_->open = false;
  }
  return r;
}

Observation RemoteSession::observe() { return last_; }

SessionFactory remote_sessions(HostPort server) {
  return [server](bool frames) -> std::unique_ptr<SimSession> {
    return std::make_unique<RemoteSession>(server, frames);
  };
}

}  // namespace vlnpilot
