#pragma once

#include <atomic>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "handsoff/relay.hpp"

namespace handsoff {

namespace beast = boost::beast;
namespace websocket = boost::beast::websocket;
namespace net = boost::asio;
using tcp = boost::asio::ip::tcp;

class WsServer;

/// One WebSocket connection. All handlers run on the connection's strand;
/// writes from other connections are posted onto it and queued.
class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, ConnectionId id, Relay& relay,
               std::function<void(ConnectionId)> on_gone)
      : ws_(std::move(socket)), id_(id), relay_(relay), on_gone_(std::move(on_gone)) {}

  ConnectionId id() const { return id_; }

  void start() {
    net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->accept(); });
  }

  void deliver(std::string line) {
    net::post(ws_.get_executor(), [self = shared_from_this(), line = std::move(line)]() mutable {
      self->queue_.push_back(std::move(line));
      if (self->queue_.size() == 1 && !self->closed_) self->write_next();
    });
  }

 private:
  void accept() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->finish();
      self->read_next();
    });
  }

  void read_next() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish();
      const auto text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->relay_.on_message(self->id_, text);
      self->read_next();
    });
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->queue_.clear();
                        return self->finish();
                      }
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->write_next();
                    });
  }

  void finish() {
    if (closed_) return;
    closed_ = true;
    relay_.on_disconnect(id_);
    on_gone_(id_);
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  bool closed_ = false;
  ConnectionId id_;
  Relay& relay_;
  std::function<void(ConnectionId)> on_gone_;
};

/// Accepts WebSocket clients and feeds their text frames to a Relay.
class WsServer : public Outbound {
 public:
  /// Throws Error(BindFailure) if the endpoint cannot be bound.
  WsServer(net::io_context& ioc, const tcp::endpoint& endpoint, RelayConfig config,
           MediaStore& store)
      : ioc_(ioc), acceptor_(net::make_strand(ioc)), relay_(std::move(config), store, *this) {
    beast::error_code ec;
    acceptor_.open(endpoint.protocol(), ec);
    if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(endpoint, ec);
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
      throw Error(ErrorCode::BindFailure,
                  endpoint.address().to_string() + ":" + std::to_string(endpoint.port()) + ": " +
                      ec.message());
    }
  }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }
  Relay& relay() { return relay_; }

  void start() { accept_next(); }

  void stop() {
    net::post(acceptor_.get_executor(), [this] {
      beast::error_code ec;
      acceptor_.close(ec);
    });
  }

  void send(ConnectionId to, std::string line) override {
    std::shared_ptr<WsConnection> conn;
    {
      std::lock_guard lock(mutex_);
      auto it = connections_.find(to);
      if (it == connections_.end()) return;
      conn = it->second.lock();
    }
    if (conn) conn->deliver(std::move(line));
  }

 private:
  void accept_next() {
    acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
      if (ec == net::error::operation_aborted || !acceptor_.is_open()) return;
      if (!ec) {
        const auto id = next_id_.fetch_add(1) + 1;
        auto conn = std::make_shared<WsConnection>(std::move(socket), id, relay_,
                                                   [this](ConnectionId gone) { forget(gone); });
        {
          std::lock_guard lock(mutex_);
          connections_[id] = conn;
        }
        conn->start();
      }
      accept_next();
    });
  }

  void forget(ConnectionId id) {
    std::lock_guard lock(mutex_);
    connections_.erase(id);
  }

  net::io_context& ioc_;
  tcp::acceptor acceptor_;
  Relay relay_;
  std::mutex mutex_;
  std::unordered_map<ConnectionId, std::weak_ptr<WsConnection>> connections_;
  std::atomic<ConnectionId> next_id_{0};
};

}  // namespace handsoff
