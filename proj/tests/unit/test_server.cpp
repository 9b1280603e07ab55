#include <gtest/gtest.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "cdrive/harness/catalog.hpp"
#include "cdrive/harness/server.hpp"
#include "cdrive/harness/telemetry.hpp"

using namespace cdrive;
using namespace cdrive::harness;
using nlohmann::json;
namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

planner::ModelDims tiny() {
  planner::ModelDims d;
  d.object_hidden = d.scene = d.gru = d.z = d.reward_hidden = 8;
  d.fuse = d.concept_hidden = 16;
  d.concept_reward_hidden = 8;
  return d;
}

struct ServerTest : ::testing::Test {
  ServerTest() : bundle(planner::make_bundle(5, {}, tiny())) {
    sim.duration = 60.0;
    serve.port = 0;
    serve.static_root = CDRIVE_TEST_STATIC;
    serve.tick_rate = 20.0;
  }
  planner::ModelBundle bundle;
  SimConfig sim;
  ServeConfig serve;
};

http::response<http::string_body> get(unsigned short port, const std::string& target) {
  net::io_context io;
  beast::tcp_stream stream(io);
  stream.connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
  http::request<http::string_body> req{http::verb::get, target, 11};
  req.set(http::field::host, "localhost");
  http::write(stream, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(stream, buf, res);
  return res;
}

struct Client {
  explicit Client(unsigned short port) : ws(io) {
    net::connect(ws.next_layer(), std::array{tcp::endpoint(net::ip::make_address("127.0.0.1"), port)});
    ws.handshake("localhost", "/ws");
  }
  json read() {
    beast::flat_buffer buf;
    ws.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }
  void send(const json& j) { ws.write(net::buffer(j.dump())); }
  // Reads until a message of `type` arrives; snapshots seen on the way are kept.
  json until(const std::string& type) {
    for (int i = 0; i < 500; ++i) {
      auto m = read();
      if (m["type"] == "snapshot") snapshots.push_back(m);
      if (m["type"] == type) return m;
    }
    throw std::runtime_error("no " + type + " message");
  }
  net::io_context io;
  websocket::stream<tcp::socket> ws;
  std::vector<json> snapshots;
};

}  // namespace

TEST_F(ServerTest, StaticFilesAndPaths) {
  Server server(catalog_scenario("empty"), bundle, sim, serve);
  server.start();
  const auto index = get(server.port(), "/");
  EXPECT_EQ(index.result(), http::status::ok);
  EXPECT_NE(index.body().find("fixture"), std::string::npos);
  EXPECT_EQ(index[http::field::content_type], "text/html");
  const auto js = get(server.port(), "/app.js?v=2");
  EXPECT_EQ(js.result(), http::status::ok);
  EXPECT_EQ(js[http::field::content_type], "application/javascript");
  EXPECT_EQ(get(server.port(), "/missing.css").result(), http::status::not_found);
  EXPECT_EQ(get(server.port(), "/../CMakeLists.txt").result(), http::status::bad_request);
  server.stop();
}

TEST_F(ServerTest, WebsocketHelloSnapshotsAndCommands) {
  Server server(catalog_scenario("cone_phantom"), bundle, sim, serve);
  server.start();
  Client c(server.port());
  const auto hello = c.read();
  EXPECT_EQ(hello["type"], "hello");
  EXPECT_EQ(hello["version"], kWireVersion);
  EXPECT_EQ(hello["scenario"], "cone_phantom");
  EXPECT_EQ(hello["total_ticks"], 120);

  const auto first = c.until("snapshot");
  ASSERT_TRUE(first.contains("map"));
  EXPECT_FALSE(first["map"]["lanes"].empty());
  const auto second = c.until("snapshot");
  EXPECT_FALSE(second.contains("map"));

  c.send({{"type", "command"}, {"seq", 7}, {"kind", "remove_object"}, {"id", "ghost"}});
  const auto err = c.until("error");
  EXPECT_EQ(err["seq"], 7);
  EXPECT_NE(err["message"].get<std::string>().find("ghost"), std::string::npos);

  c.send({{"type", "command"}, {"seq", 8}, {"kind", "teleport"}});
  EXPECT_EQ(c.until("error")["seq"], 8);
  c.send({{"type", "hello"}});
  EXPECT_TRUE(c.until("error")["seq"].is_null());

  c.send({{"type", "command"}, {"seq", 9}, {"kind", "remove_object"}, {"id", "cone0"}});
  const auto ack = c.until("ack");
  EXPECT_EQ(ack["seq"], 9);
  EXPECT_EQ(ack["kind"], "remove_object");
  const int at = ack["tick"];
  json snap;
  do snap = c.until("snapshot");
  while (snap["tick"].is_null() || snap["tick"].get<int>() < at);
  EXPECT_TRUE(snap["agents"].empty());
  server.stop();

  const auto log = server.log();
  ASSERT_GT(int(log.ticks.size()), at);
  ASSERT_EQ(log.ticks[at].commands.size(), 1u);
  EXPECT_EQ(json::parse(log.ticks[at].commands[0])["kind"], "remove_object");
}

TEST_F(ServerTest, LateJoinerGetsMap) {
  Server server(catalog_scenario("empty"), bundle, sim, serve);
  server.start();
  Client a(server.port());
  a.until("snapshot");
  a.until("snapshot");
  Client b(server.port());
  EXPECT_EQ(b.read()["type"], "hello");
  EXPECT_TRUE(b.until("snapshot").contains("map"));
  server.stop();
}
