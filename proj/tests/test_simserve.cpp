#include "support.hpp"

#include "vlnpilot/simserve.hpp"

#include <boost/asio.hpp>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <thread>

using namespace vlnpilot;
using nlohmann::json;
namespace asio = boost::asio;
using asio::ip::tcp;

namespace {

/// Raw line client for protocol-level checks.
class LineClient {
 public:
  explicit LineClient(std::uint16_t port) : socket_(io_) {
    socket_.connect({asio::ip::make_address("127.0.0.1"), port});
  }

  void send_raw(const std::string& text) { asio::write(socket_, asio::buffer(text)); }
  void send(const json& j) { send_raw(j.dump() + "\n"); }

  /// Next message, or nullopt once the server has closed the connection.
  std::optional<json> recv() {
    boost::system::error_code ec;
    const std::size_t n = asio::read_until(socket_, buf_, '\n', ec);
    if (ec) return std::nullopt;
    std::string line(asio::buffers_begin(buf_.data()), asio::buffers_begin(buf_.data()) + n - 1);
    buf_.consume(n);
    return json::parse(line);
  }

 private:
  asio::io_context io_;
  tcp::socket socket_;
  asio::streambuf buf_;
};

json hello(const DronePose& p, bool frames = false) {
  return {{"kind", "hello"}, {"session", ""}, {"v", 1}, {"frames", frames},
          {"spawn", {{"x", p.x}, {"y", p.y}, {"z", p.z}, {"yaw", p.yaw}}}};
}

json act(const std::string& session, const std::string& cmd) {
  return {{"kind", "act"}, {"session", session}, {"command", cmd}};
}

struct ServerFixture : ::testing::Test {
  std::shared_ptr<const FloorPlan> plan = support::default_plan();
  CameraModel camera;
  SimServer server{plan, SimConfig{}, camera, {"127.0.0.1", 0}};
  DronePose spawn = support::spawn_pose(*plan, "bedroom");

  void SetUp() override { server.start(); }
  void TearDown() override { server.stop(); }
  HostPort address() const { return {"127.0.0.1", server.port()}; }
};

}  // namespace

TEST(SimServe, ParseHostPort) {
  const HostPort hp = parse_host_port("127.0.0.1:7007");
  EXPECT_EQ(hp.host, "127.0.0.1");
  EXPECT_EQ(hp.port, 7007);
  EXPECT_THROW(parse_host_port("localhost"), std::invalid_argument);
  EXPECT_THROW(parse_host_port("h:99999"), std::invalid_argument);
  EXPECT_THROW(parse_host_port("h:x"), std::invalid_argument);
}

TEST_F(ServerFixture, HoverKeepsPose) {
  LineClient c(server.port());
  c.send(hello(spawn));
  const json first = *c.recv();
  EXPECT_EQ(first["kind"], "obs");
  const std::string session = first["session"];
  EXPECT_FALSE(session.empty());
  c.send(act(session, "E"));
  const json second = *c.recv();
  EXPECT_EQ(second["kind"], "obs");
  EXPECT_EQ(second["step"], 1);
  for (const char* k : {"x", "y", "z", "yaw"}) EXPECT_EQ(second[k], first[k]) << k;
  EXPECT_FALSE(second["collided"].get<bool>());
  EXPECT_FALSE(second.contains("frames"));
  c.send({{"kind", "bye"}, {"session", session}});
  const json bye = *c.recv();
  EXPECT_EQ(bye["kind"], "result");
  EXPECT_EQ(bye["reason"], "bye");
  EXPECT_FALSE(c.recv());
}

TEST_F(ServerFixture, FramesOnRequest) {
  LineClient c(server.port());
  c.send(hello(spawn, true));
  const json o = *c.recv();
  ASSERT_TRUE(o.contains("frames"));
  const auto png = base64_decode(o["frames"]["front"].get<std::string>());
  EXPECT_EQ(decode_png(png).width, camera.width);
}

TEST_F(ServerFixture, ActBeforeHello) {
  LineClient c(server.port());
  c.send(act("", "A1"));
  const json e = *c.recv();
  EXPECT_EQ(e["kind"], "error");
  EXPECT_EQ(e["message"], "no session");
  // The connection stays usable.
  c.send(hello(spawn));
  EXPECT_EQ((*c.recv())["kind"], "obs");
}

TEST_F(ServerFixture, UnknownCommandKeepsSession) {
  LineClient c(server.port());
  c.send(hello(spawn));
  const std::string session = (*c.recv())["session"];
  c.send(act(session, "Z9"));
  const json e = *c.recv();
  EXPECT_EQ(e["kind"], "error");
  EXPECT_EQ(e["message"], "unknown command 'Z9'");
  c.send(act("s999", "B1"));
  EXPECT_EQ((*c.recv())["message"], "unknown session 's999'");
  c.send(act(session, "B1"));
  const json o = *c.recv();
  EXPECT_EQ(o["kind"], "obs");
  EXPECT_EQ(o["step"], 1);
}

TEST_F(ServerFixture, PipelinedActRejected) {
  LineClient c(server.port());
  c.send(hello(spawn));
  const std::string session = (*c.recv())["session"];
  c.send_raw(act(session, "B1").dump() + "\n" + act(session, "B1").dump() + "\n");
  EXPECT_EQ((*c.recv())["kind"], "obs");
  const json e = *c.recv();
  EXPECT_EQ(e["kind"], "error");
  EXPECT_EQ(e["message"], "act without intervening obs");
  c.send(act(session, "C1"));
  const json o = *c.recv();
  EXPECT_EQ(o["step"], 2);
}

TEST_F(ServerFixture, MalformedLineClosesSession) {
  LineClient c(server.port());
  c.send(hello(spawn));
  c.recv();
  c.send_raw("this is not json\n");
  const json e = *c.recv();
  EXPECT_EQ(e["kind"], "error");
  EXPECT_EQ(e["message"].get<std::string>().rfind("malformed", 0), 0u);
  EXPECT_FALSE(c.recv());

  LineClient d(server.port());
  d.send({{"kind", "hello"}});
  EXPECT_EQ((*d.recv())["kind"], "error");
  EXPECT_FALSE(d.recv());

  LineClient v(server.port());
  json h = hello(spawn);
  h["v"] = 2;
  v.send(h);
  EXPECT_EQ((*v.recv())["message"], "unsupported protocol version 2");
  EXPECT_FALSE(v.recv());
}

TEST_F(ServerFixture, CollisionClosesWithResult) {
  LineClient c(server.port());
  c.send(hello(spawn));
  const std::string session = (*c.recv())["session"];
  for (int i = 0; i < 40; ++i) {
    c.send(act(session, "A3"));
    const json o = *c.recv();
    if (o["collided"].get<bool>()) {
      EXPECT_EQ(o["contact"]["id"], "north");
      const json r = *c.recv();
      EXPECT_EQ(r["kind"], "result");
      EXPECT_EQ(r["reason"], "collision");
      EXPECT_FALSE(c.recv());
      return;
    }
  }
  FAIL() << "never collided";
}

TEST_F(ServerFixture, RemoteMatchesLocalStepByStep) {
  RemoteSession remote(address(), false);
  Simulator local(plan, {});
  EXPECT_EQ(remote.reset(spawn).pose(), local.reset(spawn).pose());
  for (MotionCommand m : {MotionCommand::B2, MotionCommand::A3, MotionCommand::D1, MotionCommand::C3,
                          MotionCommand::A2, MotionCommand::E}) {
    EXPECT_EQ(remote.step(m), local.step(m));
    EXPECT_EQ(remote.observe().pose(), local.observe().pose());
  }
  remote.close();
}

TEST_F(ServerFixture, StartInCollisionSurfaces) {
  RemoteSession remote(address(), false);
  EXPECT_THROW(remote.reset({6.0, 1.0, 1.0, 0.0}), StartInCollisionError);
}

TEST_F(ServerFixture, SessionsAreIsolated) {
  RemoteSession a(address(), false), b(address(), false);
  const DronePose other = support::spawn_pose(*plan, "living_kitchen");
  a.reset(spawn);
  b.reset(other);
  EXPECT_NE(a.session_id(), b.session_id());
  Simulator la(plan, {}), lb(plan, {});
  la.reset(spawn);
  lb.reset(other);
  for (int i = 0; i < 10; ++i) {
    const auto ma = i % 2 ? MotionCommand::B1 : MotionCommand::A1;
    const auto mb = i % 3 ? MotionCommand::C2 : MotionCommand::A2;
    EXPECT_EQ(a.step(ma), la.step(ma));
    EXPECT_EQ(b.step(mb), lb.step(mb));
  }
}

TEST_F(ServerFixture, OracleEpisodeOverWireEqualsLocal) {
  OraclePilot p1, p2;
  auto c = support::episode_config(plan, support::spawn_pose(*plan, "living_kitchen"),
                                   {"Find the refrigerator", "living_kitchen", "refrigerator"});
  const auto local = run_episode(c, p1, local_sessions(plan, {}, camera));
  const auto remote = run_episode(c, p2, remote_sessions(address()));
  EXPECT_EQ(local.outcome, Outcome::Success);
  EXPECT_EQ(remote, local);
}

TEST(SimServe, ServerKilledMidEpisode) {
  const auto plan = support::default_plan();
  auto server = std::make_unique<SimServer>(plan, SimConfig{}, CameraModel{}, HostPort{"127.0.0.1", 0});
  server->start();
  const HostPort addr{"127.0.0.1", server->port()};

  // Kills the server on the fifth decision.
  class KillingPilot final : public Pilot {
   public:
    explicit KillingPilot(std::unique_ptr<SimServer>& s) : server_(s) {}
    Decision decide(const PilotContext& ctx) override {
      if (ctx.step == 4) server_->stop();
      return inner_.decide(ctx);
    }
    std::string kind() const override { return "oracle"; }

   private:
    std::unique_ptr<SimServer>& server_;
    OraclePilot inner_;
  } pilot(server);

  auto c = support::episode_config(plan, support::spawn_pose(*plan, "living_kitchen"),
                                   {"Go to the bathroom", "bathroom", std::nullopt});
  const auto res = run_episode(c, pilot, remote_sessions(addr));
  EXPECT_EQ(res.outcome, Outcome::ProtocolError);
  EXPECT_EQ(res.steps_used, 4);
  EXPECT_NE(res.cause.find("simulator"), std::string::npos) << res.cause;
}

TEST(SimServe, ConnectionRefused) {
  const auto plan = support::default_plan();
  OraclePilot pilot;
  auto c = support::episode_config(plan, support::spawn_pose(*plan, "bedroom"),
                                   {"Go to the bathroom", "bathroom", std::nullopt});
  const auto res = run_episode(c, pilot, remote_sessions({"127.0.0.1", 1}));
  EXPECT_EQ(res.outcome, Outcome::ProtocolError);
  EXPECT_EQ(res.steps_used, 0);
}
