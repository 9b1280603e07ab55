#include "cdrive/harness/server.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "cdrive/harness/telemetry.hpp"

namespace cdrive::harness {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

struct Frame {
  json snapshot;  // without map
  int map_version = 0;
  std::shared_ptr<const json> map;
};

class WsSession;

struct Pending {
  std::weak_ptr<WsSession> from;
  std::optional<long> seq;
  OperatorCommand command;
};

// Shared between the network thread and the simulation thread. Members
// marked "io" are only touched on the network thread.
struct Hub : std::enable_shared_from_this<Hub> {
  Hub(const world::Scenario& scenario, const planner::ModelBundle& bundle, const SimConfig& sim, ServeConfig cfg)
      : cfg(std::move(cfg)), acceptor(io), signals(io, SIGINT, SIGTERM), sim(scenario, bundle, sim) {}

  ServeConfig cfg;
  net::io_context io;
  tcp::acceptor acceptor;
  net::signal_set signals;

  mutable std::mutex sim_mutex;
  Simulator sim;

  std::mutex queue_mutex;
  std::deque<Pending> queue;

  std::mutex done_mutex;
  std::condition_variable done_cv;
  std::atomic<bool> stopping{false};

  std::set<std::shared_ptr<WsSession>> sessions;  // io
  json hello;                                     // io
  std::optional<Frame> last;                      // io

  void accept();
  void on_message(const std::shared_ptr<WsSession>& from, const std::string& text);
  void broadcast(Frame f);
  void sim_loop();
  void request_stop() {
    {
      std::lock_guard lock(done_mutex);
      stopping = true;
    }
    done_cv.notify_all();
  }
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, std::shared_ptr<Hub> hub) : ws_(std::move(socket)), hub_(std::move(hub)) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->on_accept();
    });
  }

  void send(std::string text) {
    out_.push_back(std::make_shared<std::string>(std::move(text)));
    if (out_.size() == 1) write();
  }

  void send_frame(const Frame& f) {
    if (f.map_version == map_sent_) {
      send(f.snapshot.dump());
      return;
    }
    json m = f.snapshot;
    m["map"] = *f.map;
    map_sent_ = f.map_version;
    send(m.dump());
  }

 private:
  void on_accept() {
    hub_->sessions.insert(shared_from_this());
    send(hub_->hello.dump());
    if (hub_->last) send_frame(*hub_->last);
    read();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->drop();
      const auto text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->hub_->on_message(self, text);
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(*out_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->drop();
      self->out_.pop_front();
      if (!self->out_.empty()) self->write();
    });
  }

  void drop() { hub_->sessions.erase(shared_from_this()); }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<Hub> hub_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> out_;
  int map_sent_ = -1;
};

std::string mime_type(const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

http::response<http::string_body> static_response(const http::request<http::string_body>& req,
                                                  const std::string& root) {
  auto reply = [&](http::status status, std::string body, const std::string& type) {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::server, "cdrive");
    res.set(http::field::content_type, type);
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  };
  if (req.method() != http::verb::get && req.method() != http::verb::head)
    return reply(http::status::bad_request, "unsupported method\n", "text/plain");
  std::string target(req.target());
  if (const auto q = target.find('?'); q != std::string::npos) target.erase(q);
  if (target.empty() || target[0] != '/' || target.find("..") != std::string::npos)
    return reply(http::status::bad_request, "bad path\n", "text/plain");
  if (target.back() == '/') target += "index.html";
  const std::string path = root + target;
  std::ifstream in(path, std::ios::binary);
  if (!in) return reply(http::status::not_found, "not found\n", "text/plain");
  std::ostringstream body;
  body << in.rdbuf();
  auto res = reply(http::status::ok, body.str(), mime_type(path));
  if (req.method() == http::verb::head) res.body().clear();
  return res;
}

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, std::shared_ptr<Hub> hub) : stream_(std::move(socket)), hub_(std::move(hub)) {}

  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->handle();
    });
  }

 private:
  void handle() {
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/ws") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), hub_)->run(std::move(req_));
      }
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>(static_response(req_, hub_->cfg.static_root));
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec || !res->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->read();
    });
  }

  beast::tcp_stream stream_;
  std::shared_ptr<Hub> hub_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

void Hub::accept() {
  acceptor.async_accept(net::make_strand(io), [self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<HttpSession>(std::move(socket), self)->read();
    self->accept();
  });
}

void Hub::on_message(const std::shared_ptr<WsSession>& from, const std::string& text) {
  std::optional<long> seq;
  try {
    const auto j = json::parse(text);
    if (j.contains("seq") && j.at("seq").is_number_integer()) seq = j.at("seq").get<long>();
    if (!j.is_object() || j.value("type", "") != "command") throw CommandError("expected a message of type 'command'");
    auto cmd = command_from_json(j);
    std::lock_guard lock(queue_mutex);
    queue.push_back({from, seq, std::move(cmd)});
  } catch (const std::exception& e) {
    from->send(error_message(seq, e.what()).dump());
  }
}

void Hub::broadcast(Frame f) {
  net::post(io, [self = shared_from_this(), f = std::move(f)]() mutable {
    for (const auto& s : self->sessions) s->send_frame(f);
    self->last = std::move(f);
  });
}

void Hub::sim_loop() {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / cfg.tick_rate));
  std::shared_ptr<const json> map;
  int map_version = -1;
  auto frame = [&] {
    if (sim.world().map_version() != map_version || !map) {
      map_version = sim.world().map_version();
      map = std::make_shared<const json>(map_payload(*sim.world().map()));
    }
    return Frame{snapshot_message(sim, false), map_version, map};
  };
  {
    std::lock_guard lock(sim_mutex);
    broadcast(frame());
  }
  auto next = clock::now() + period;
  while (true) {
    {
      std::unique_lock lock(done_mutex);
      if (done_cv.wait_until(lock, next, [&] { return stopping.load(); })) return;
    }
    next += period;
    std::deque<Pending> batch;
    {
      std::lock_guard lock(queue_mutex);
      batch.swap(queue);
    }
    std::lock_guard lock(sim_mutex);
    for (auto& p : batch) {
      const auto ack = sim.apply(p.command);
      const auto reply = ack.ok ? ack_message(p.seq, command_kind(p.command), sim.next_tick()).dump()
                                : error_message(p.seq, ack.message).dump();
      net::post(io, [from = p.from, reply] {
        if (auto s = from.lock()) s->send(reply);
      });
    }
    if (!sim.finished()) sim.step();
    broadcast(frame());
  }
}

}  // namespace

struct Server::Impl {
  std::shared_ptr<Hub> hub;
  std::thread io_thread, sim_thread;
  bool started = false;
};

Server::Server(const world::Scenario& scenario, const planner::ModelBundle& bundle, const SimConfig& sim,
               const ServeConfig& cfg)
    : impl_(std::make_unique<Impl>()) {
  if (!(cfg.tick_rate > 0)) throw std::invalid_argument("serve: tick rate must be positive");
  impl_->hub = std::make_shared<Hub>(scenario, bundle, sim, cfg);
}

Server::~Server() { stop(); }

void Server::start() {
  auto& hub = *impl_->hub;
  const tcp::endpoint ep{net::ip::make_address(hub.cfg.address), hub.cfg.port};
  hub.acceptor.open(ep.protocol());
  hub.acceptor.set_option(net::socket_base::reuse_address(true));
  hub.acceptor.bind(ep);
  hub.acceptor.listen(net::socket_base::max_listen_connections);
  hub.hello = hello_message(hub.sim);
  hub.accept();
  hub.signals.async_wait([h = impl_->hub](beast::error_code ec, int) {
    if (!ec) h->request_stop();
  });
  impl_->started = true;
  impl_->io_thread = std::thread([h = impl_->hub] { h->io.run(); });
  impl_->sim_thread = std::thread([h = impl_->hub] { h->sim_loop(); });
}

unsigned short Server::port() const { return impl_->hub->acceptor.local_endpoint().port(); }

void Server::stop() {
  if (!impl_ || !impl_->started) return;
  impl_->hub->request_stop();
  if (impl_->sim_thread.joinable()) impl_->sim_thread.join();
  impl_->hub->io.stop();
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
  impl_->started = false;
}

void Server::run_until_signal() {
  auto& hub = *impl_->hub;
  std::unique_lock lock(hub.done_mutex);
  hub.done_cv.wait(lock, [&] { return hub.stopping.load(); });
  lock.unlock();
  stop();
}

DriveLog Server::log() const {
  std::lock_guard lock(impl_->hub->sim_mutex);
  return impl_->hub->sim.log();
}

}  // namespace cdrive::harness
