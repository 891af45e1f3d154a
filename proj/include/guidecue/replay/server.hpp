#pragma once

// WebSocket transport for the replay controller. Each connection runs on
// its own strand with its own controller and tick timer; sessions are
// shared read-only through the store.

#include <chrono>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <boost/asio/bind_executor.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "guidecue/replay/controller.hpp"

namespace guidecue::replay {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket&& socket, std::shared_ptr<const SessionStore> store, ControllerConfig cfg)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), controller_(std::move(store), cfg) {}

  void run() {
    net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->start(); });
  }

  /// Closes the connection from any thread.
  void close() {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      if (self->closed_) return;
      self->closed_ = true;
      ++self->generation_;
      self->timer_.cancel();
      beast::error_code ec;
      beast::get_lowest_layer(self->ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
      beast::get_lowest_layer(self->ws_).socket().close(ec);
    });
  }

 private:
  using clock = std::chrono::steady_clock;

  void start() {
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().set_option(tcp::no_delay(true), ec);
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->read();
    });
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        ++self->generation_;
        self->timer_.cancel();
        return;
      }
      self->on_message(beast::buffers_to_string(self->buffer_.data()));
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void on_message(const std::string& text) {
    const double before = controller_.tick_interval_s();
    bool restart_clock = false;
    std::vector<std::string> out;
    try {
      const ClientMessage msg = parse_client_message(text);
      restart_clock = std::holds_alternative<Subscribe>(msg) || std::holds_alternative<Seek>(msg);
      out = controller_.handle(msg);
    } catch (const Error& e) {
      out.push_back(encode_error(e.code(), e.detail()));
    } catch (const std::exception& e) {
      out.push_back(encode_error(ErrorCode::MalformedMessage, e.what()));
    }
    for (auto& m : out) send(std::move(m));
    if (restart_clock || controller_.tick_interval_s() != before) schedule(clock::now());
  }

  // Arms the tick timer one interval after `from`. Deadlines advance by
  // whole intervals so timer latency does not accumulate.
  void schedule(clock::time_point from) {
    ++generation_;
    timer_.cancel();
    const double interval = controller_.tick_interval_s();
    if (interval <= 0.0 || closed_) return;
    interval_ = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(interval));
    deadline_ = from + interval_;
    arm();
  }

  void arm() {
    timer_.expires_at(deadline_);
    timer_.async_wait([self = shared_from_this(), gen = generation_](beast::error_code ec) {
      if (ec || gen != self->generation_ || self->closed_) return;
      self->on_tick();
    });
  }

  void on_tick() {
    for (auto& m : controller_.tick()) send(std::move(m));
    if (controller_.tick_interval_s() <= 0.0) return;
    deadline_ += interval_;
    const auto now = clock::now();
    if (deadline_ + interval_ < now) deadline_ = now + interval_;  // fell far behind: resync
    arm();
  }

  void send(std::string msg) {
    if (closed_) return;
    queue_.push_back(std::move(msg));
    if (queue_.size() == 1) write_front();
  }

  void write_front() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        ++self->generation_;
        self->timer_.cancel();
        self->queue_.clear();
        return;
      }
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write_front();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  net::steady_timer timer_;
  ReplayController controller_;
  std::deque<std::string> queue_;
  clock::time_point deadline_{};
  clock::duration interval_{};
  std::uint64_t generation_{0};
  bool closed_{false};
};

class ReplayServer {
 public:
  ReplayServer(net::io_context& ioc, const tcp::endpoint& endpoint, std::shared_ptr<const SessionStore> store,
               ControllerConfig cfg = {})
      : ioc_(ioc), acceptor_(net::make_strand(ioc)), store_(std::move(store)), cfg_(cfg) {
    if (!store_ || store_->empty()) throw Error(ErrorCode::InvalidArgument, "replay server needs at least one session");
    beast::error_code ec;
    acceptor_.open(endpoint.protocol(), ec);
    if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(endpoint, ec);
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot listen on " + endpoint.address().to_string() + ":" +
                                                  std::to_string(endpoint.port()) + ": " + ec.message());
  }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }

  void start() { accept(); }

  /// Stops accepting and closes every live connection.
  void stop() {
    net::post(acceptor_.get_executor(), [this] {
      beast::error_code ec;
      acceptor_.close(ec);
    });
    std::lock_guard lock(mu_);
    for (auto& weak : connections_) {
      if (auto c = weak.lock()) c->close();
    }
    connections_.clear();
  }

 private:
  void accept() {
    acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // closed
      auto conn = std::make_shared<Connection>(std::move(socket), store_, cfg_);
      {
        std::lock_guard lock(mu_);
        std::erase_if(connections_, [](const auto& w) { return w.expired(); });
        connections_.push_back(conn);
      }
      conn->run();
      accept();
    });
  }

  net::io_context& ioc_;
  tcp::acceptor acceptor_;
  std::shared_ptr<const SessionStore> store_;
  ControllerConfig cfg_;
  std::mutex mu_;
  std::vector<std::weak_ptr<Connection>> connections_;
};

}  // namespace guidecue::replay
