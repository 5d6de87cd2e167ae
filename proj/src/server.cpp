// Copyright 2026 The Telegrasp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "telegrasp/server.hpp"

#include <atomic>
#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <deque>
#include <iostream>

#include "telegrasp/error.hpp"

namespace telegrasp {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

std::atomic<std::uint64_t> session_counter{0};

// One WebSocket session. Every handler runs on the socket's strand, so the
// session state needs no locking. Solves run inline on that strand.
class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, const ServiceCore& core)
      : ws_(std::move(socket)),
        timer_(ws_.get_executor()),
        logic_(core, "s" + std::to_string(++session_counter)),
        budget_(core.options().rate_limit) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      closed_ = true;
      timer_.cancel();
      return;
    }
    inbox_.push_back(beast::buffers_to_string(buffer_.data()));
    buffer_.consume(buffer_.size());
    pump();
    do_read();
  }

  bool later_hand_update() const {
    for (std::size_t i = 1; i < inbox_.size(); ++i) {
      if (SessionLogic::is_hand_update(inbox_[i])) return true;
    }
    return false;
  }

  // Drains the inbox one message per turn. A hand_update over the rate
  // budget is dropped when a newer one is already queued (latest wins);
  // otherwise it waits for the next slot.
  void pump() {
    if (waiting_ || closed_ || inbox_.empty()) return;
    const auto now = RateBudget::Clock::now();
    if (SessionLogic::is_hand_update(inbox_.front())) {
      if (!budget_.unlimited()) {
        while (inbox_.size() > 1 && SessionLogic::is_hand_update(inbox_.front()) &&
               (throttled_ || !budget_.available(now)) && later_hand_update()) {
          inbox_.pop_front();
          ++coalesced_;
        }
      }
      if (SessionLogic::is_hand_update(inbox_.front()) && !budget_.available(now)) {
        waiting_ = true;
        timer_.expires_at(budget_.next_slot());
        timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
          self->waiting_ = false;
          if (ec) return;
          self->throttled_ = true;
          self->pump();
        });
        return;
      }
    }
    const std::string text = std::move(inbox_.front());
    inbox_.pop_front();
    std::optional<nlohmann::json> reply;
    if (SessionLogic::is_hand_update(text)) {
      budget_.consume(now);
      throttled_ = false;
      reply = logic_.handle(text, coalesced_);
      coalesced_ = 0;
    } else {
      reply = logic_.handle(text);
    }
    if (reply) send(reply->dump());
    if (!inbox_.empty()) net::post(ws_.get_executor(), [self = shared_from_this()] { self->pump(); });
  }

  void send(std::string text) {
    outbox_.push_back(std::move(text));
    if (outbox_.size() == 1) do_write();
  }

  void do_write() {
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()),
                    beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      closed_ = true;
      return;
    }
    outbox_.pop_front();
    if (!outbox_.empty()) do_write();
  }

  websocket::stream<beast::tcp_stream> ws_;
  net::steady_timer timer_;
  beast::flat_buffer buffer_;
  SessionLogic logic_;
  RateBudget budget_;
  std::deque<std::string> inbox_;
  std::deque<std::string> outbox_;
  std::size_t coalesced_ = 0;
  bool waiting_ = false;
  bool throttled_ = false;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, ServiceCore& core) : stream_(std::move(socket)), core_(core) {}

  void run() {
    net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
  }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/session") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), core_)->run(std::move(req_));
        return;
      }
      respond({404, {{"error", "websocket endpoint is /session"}, {"kind", "not_found"}}});
      return;
    }
    respond(core_.handle_http(std::string(req_.method_string()), std::string(req_.target()), req_.body()));
  }

  void respond(const HttpReply& reply) {
    auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(reply.status),
                                                                   req_.version());
    res->set(http::field::content_type, "application/json");
    res->keep_alive(req_.keep_alive());
    res->body() = reply.body.dump();
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!res->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  ServiceCore& core_;
};

}  // namespace

struct Server::Impl {
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  ServiceCore* core = nullptr;
  bool running = false;

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpSession>(std::move(socket), *core)->run();
      accept();
    });
  }
};

Server::Server(ServiceCore& core) : core_(core), impl_(std::make_unique<Impl>()) { impl_->core = &core_; }

Server::~Server() { stop(); }

unsigned short Server::start() {
  const auto& opts = core_.options();
  const tcp::endpoint endpoint(net::ip::make_address(opts.address), opts.port);
  auto& acc = impl_->acceptor;
  acc.open(endpoint.protocol());
  acc.set_option(net::socket_base::reuse_address(true));
  acc.bind(endpoint);
  acc.listen(net::socket_base::max_listen_connections);
  port_ = acc.local_endpoint().port();
  impl_->accept();
  impl_->running = true;
  for (int i = 0; i < std::max(1, opts.threads); ++i) {
    threads_.emplace_back([this] { impl_->ioc.run(); });
  }
  return port_;
}

void Server::stop() {
  if (!impl_->running) return;
  impl_->running = false;
  impl_->ioc.stop();
  for (auto& t : threads_) t.join();
  threads_.clear();
}

void Server::run_until_signal() {
  net::io_context signals_ctx;
  net::signal_set signals(signals_ctx, SIGINT, SIGTERM);
  signals.async_wait([](beast::error_code, int) {});
  signals_ctx.run();
  stop();
}

}  // namespace telegrasp
