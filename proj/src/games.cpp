#include "klent/games.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace klent::games {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

int8_t stone_of(int player) { return static_cast<int8_t>(player + 1); }

}  // namespace

const char* to_string(GameKind kind) {
  switch (kind) {
    case GameKind::countup: return "countup";
    case GameKind::hex: return "hex";
    case GameKind::othello: return "othello";
  }
  return "?";
}

GameKind game_kind_from_string(const std::string& name) {
  if (name == "countup") return GameKind::countup;
  if (name == "hex") return GameKind::hex;
  if (name == "othello") return GameKind::othello;
  throw std::invalid_argument("unknown game: " + name);
}

GameSpec GameSpec::countup(int target, int max_increment) {
  GameSpec s;
  s.kind = GameKind::countup;
  s.countup_target = target;
  s.countup_increment = max_increment;
  s.validate();
  return s;
}

GameSpec GameSpec::hex(int side) {
  GameSpec s;
  s.kind = GameKind::hex;
  s.board_side = side;
  s.validate();
  return s;
}

GameSpec GameSpec::othello(int side) {
  GameSpec s;
  s.kind = GameKind::othello;
  s.board_side = side;
  s.validate();
  return s;
}

void GameSpec::validate() const {
  switch (kind) {
    case GameKind::countup:
      require(countup_target >= 1, "countup: target must be >= 1");
      require(countup_increment >= 1, "countup: max increment must be >= 1");
      return;
    case GameKind::hex:
      require(board_side >= 2, "hex: side must be >= 2");
      return;
    case GameKind::othello:
      require(board_side >= 4, "othello: side must be >= 4");
      require(board_side % 2 == 0, "othello: side must be even");
      return;
  }
  throw std::invalid_argument("invalid game kind");
}

int GameSpec::action_count() const {
  switch (kind) {
    case GameKind::countup: return countup_increment;
    case GameKind::hex: return board_side * board_side;
    case GameKind::othello: return board_side * board_side + 1;  // + pass
  }
  return 0;
}

int GameSpec::feature_count() const {
  switch (kind) {
    case GameKind::countup: return countup_target + 1;
    case GameKind::hex:
    case GameKind::othello: return 3 * board_side * board_side;
  }
  return 0;
}

int GameSpec::default_max_ply() const {
  switch (kind) {
    case GameKind::countup: return countup_target + 1;
    case GameKind::hex: return board_side * board_side + 1;
    case GameKind::othello: return 3 * board_side * board_side + 4;
  }
  return 0;
}

LegalMask LegalMask::from_bits(std::vector<uint8_t> bits) {
  LegalMask m;
  m.bits = std::move(bits);
  for (int a = 0; a < static_cast<int>(m.bits.size()); ++a) {
    if (m.bits[static_cast<size_t>(a)]) m.legal.push_back(a);
  }
  return m;
}

// ---------------------------------------------------------------------------
// count-up
// ---------------------------------------------------------------------------

namespace {

GameState countup_reset(const GameSpec& spec) {
  GameState s;
  s.spec = spec;
  s.counter = 0;
  return s;
}

std::pair<GameState, int> countup_step(const GameState& state, int action) {
  const int increment = action + 1;
  GameState next = state;
  next.counter = state.counter + increment;
  next.to_move = 1 - state.to_move;
  if (next.counter >= state.spec.countup_target) {
    next.terminal = true;
    next.outcome = 1;  // reaching the target always wins
    return {next, 1};
  }
  return {next, 0};
}

}  // namespace

// ---------------------------------------------------------------------------
// hex: player 0 connects top row to bottom row, player 1 left to right.
// Rhombus board, cell (r, c) at index r*side + c; hex neighbourhood is
// (r-1,c), (r-1,c+1), (r,c-1), (r,c+1), (r+1,c-1), (r+1,c).
// ---------------------------------------------------------------------------

namespace {

bool hex_connected(const GameState& s, int player) {
  const int n = s.spec.board_side;
  const int8_t stone = stone_of(player);
  std::vector<uint8_t> seen(static_cast<size_t>(n) * n, 0);
  std::vector<int> stack;
  for (int i = 0; i < n; ++i) {
    const int start = player == 0 ? i : i * n;  // top row / left column
    if (s.cells[static_cast<size_t>(start)] == stone) {
      seen[static_cast<size_t>(start)] = 1;
      stack.push_back(start);
    }
  }
  static const int dr[6] = {-1, -1, 0, 0, 1, 1};
  static const int dc[6] = {0, 1, -1, 1, -1, 0};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    const int r = cur / n, c = cur % n;
    if ((player == 0 && r == n - 1) || (player == 1 && c == n - 1)) return true;
    for (int d = 0; d < 6; ++d) {
      const int nr = r + dr[d], nc = c + dc[d];
      if (nr < 0 || nr >= n || nc < 0 || nc >= n) continue;
      const int idx = nr * n + nc;
      if (seen[static_cast<size_t>(idx)] || s.cells[static_cast<size_t>(idx)] != stone) continue;
      seen[static_cast<size_t>(idx)] = 1;
      stack.push_back(idx);
    }
  }
  return false;
}

GameState hex_reset(const GameSpec& spec) {
  GameState s;
  s.spec = spec;
  s.cells.assign(static_cast<size_t>(spec.board_side) * spec.board_side, 0);
  return s;
}

std::pair<GameState, int> hex_step(const GameState& state, int action) {
  GameState next = state;
  next.cells[static_cast<size_t>(action)] = stone_of(state.to_move);
  next.to_move = 1 - state.to_move;
  if (hex_connected(next, state.to_move)) {
    next.terminal = true;
    next.outcome = 1;
    return {next, 1};
  }
  return {next, 0};
}

}  // namespace

// ---------------------------------------------------------------------------
// othello
// ---------------------------------------------------------------------------

namespace {

int othello_pass_action(const GameSpec& spec) { return spec.board_side * spec.board_side; }

// Stones flipped by `player` placing at (r, c); empty if the move is illegal.
std::vector<int> othello_flips(const GameState& s, int player, int cell) {
  const int n = s.spec.board_side;
  std::vector<int> flips;
  if (s.cells[static_cast<size_t>(cell)] != 0) return flips;
  const int8_t mine = stone_of(player);
  const int8_t theirs = stone_of(1 - player);
  const int r0 = cell / n, c0 = cell % n;
  static const int dr[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static const int dc[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  for (int d = 0; d < 8; ++d) {
    int r = r0 + dr[d], c = c0 + dc[d];
    std::vector<int> line;
    while (r >= 0 && r < n && c >= 0 && c < n && s.cells[static_cast<size_t>(r * n + c)] == theirs) {
      line.push_back(r * n + c);
      r += dr[d];
      c += dc[d];
    }
    if (line.empty()) continue;
    if (r >= 0 && r < n && c >= 0 && c < n && s.cells[static_cast<size_t>(r * n + c)] == mine) {
      flips.insert(flips.end(), line.begin(), line.end());
    }
  }
  return flips;
}

GameState othello_reset(const GameSpec& spec) {
  GameState s;
  s.spec = spec;
  const int n = spec.board_side;
  s.cells.assign(static_cast<size_t>(n) * n, 0);
  const int h = n / 2;
  s.cells[static_cast<size_t>((h - 1) * n + (h - 1))] = stone_of(1);
  s.cells[static_cast<size_t>(h * n + h)] = stone_of(1);
  s.cells[static_cast<size_t>((h - 1) * n + h)] = stone_of(0);
  s.cells[static_cast<size_t>(h * n + (h - 1))] = stone_of(0);
  return s;
}

int othello_score_for(const GameState& s, int player) {
  int mine = 0, theirs = 0;
  for (int8_t c : s.cells) {
    if (c == stone_of(player)) ++mine;
    else if (c != 0) ++theirs;
  }
  return mine > theirs ? 1 : (mine < theirs ? -1 : 0);
}

std::pair<GameState, int> othello_step(const GameState& state, int action) {
  GameState next = state;
  const int mover = state.to_move;
  if (action == othello_pass_action(state.spec)) {
    next.pass_streak = state.pass_streak + 1;
  } else {
    const auto flips = othello_flips(state, mover, action);
    next.cells[static_cast<size_t>(action)] = stone_of(mover);
    for (int f : flips) next.cells[static_cast<size_t>(f)] = stone_of(mover);
    next.pass_streak = 0;
  }
  next.to_move = 1 - mover;
  const bool board_full =
      std::none_of(next.cells.begin(), next.cells.end(), [](int8_t c) { return c == 0; });
  if (board_full || next.pass_streak >= 2) {
    next.terminal = true;
    next.outcome = othello_score_for(next, mover);
    return {next, next.outcome};
  }
  return {next, 0};
}

}  // namespace

// ---------------------------------------------------------------------------
// uniform interface
// ---------------------------------------------------------------------------

GameState reset(const GameSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case GameKind::countup: return countup_reset(spec);
    case GameKind::hex: return hex_reset(spec);
    case GameKind::othello: return othello_reset(spec);
  }
  throw std::invalid_argument("invalid game kind");
}

LegalMask legal_actions(const GameState& state) {
  if (state.terminal) throw std::logic_error("legal_actions called on a terminal state");
  const int actions = state.spec.action_count();
  std::vector<uint8_t> bits(static_cast<size_t>(actions), 0);
  switch (state.spec.kind) {
    case GameKind::countup:
      for (int a = 0; a < actions; ++a) bits[static_cast<size_t>(a)] = 1;
      break;
    case GameKind::hex:
      for (int a = 0; a < actions; ++a) bits[static_cast<size_t>(a)] = state.cells[static_cast<size_t>(a)] == 0;
      break;
    case GameKind::othello: {
      bool any = false;
      for (int a = 0; a < actions - 1; ++a) {
        if (!othello_flips(state, state.to_move, a).empty()) {
          bits[static_cast<size_t>(a)] = 1;
          any = true;
        }
      }
      if (!any) bits[static_cast<size_t>(actions - 1)] = 1;  // pass only when stuck
      break;
    }
  }
  return LegalMask::from_bits(std::move(bits));
}

std::pair<GameState, int> step(const GameState& state, int action) {
  if (state.terminal) throw std::logic_error("step called on a terminal state");
  const LegalMask mask = legal_actions(state);
  if (!mask.is_legal(action)) {
    std::ostringstream os;
    os << "illegal action " << action << " (" << action_name(state.spec, action) << ") at state "
       << state_key(state);
    throw std::invalid_argument(os.str());
  }
  switch (state.spec.kind) {
    case GameKind::countup: return countup_step(state, action);
    case GameKind::hex: return hex_step(state, action);
    case GameKind::othello: return othello_step(state, action);
  }
  throw std::invalid_argument("invalid game kind");
}

std::vector<double> encode(const GameState& state) {
  std::vector<double> f(static_cast<size_t>(state.spec.feature_count()), 0.0);
  switch (state.spec.kind) {
    case GameKind::countup: {
      if (state.counter < state.spec.countup_target) f[static_cast<size_t>(state.counter)] = 1.0;
      f[static_cast<size_t>(state.spec.countup_target)] = state.to_move == 0 ? 1.0 : 0.0;
      break;
    }
    case GameKind::hex:
    case GameKind::othello: {
      const size_t cells = state.cells.size();
      for (size_t i = 0; i < cells; ++i) {
        if (state.cells[i] == 1) f[i] = 1.0;
        else if (state.cells[i] == 2) f[cells + i] = 1.0;
      }
      const double tm = state.to_move == 0 ? 1.0 : 0.0;
      for (size_t i = 0; i < cells; ++i) f[2 * cells + i] = tm;
      break;
    }
  }
  return f;
}

std::string state_key(const GameState& state) {
  std::ostringstream os;
  switch (state.spec.kind) {
    case GameKind::countup:
      os << "c" << state.spec.countup_target << "." << state.spec.countup_increment << "|"
         << state.counter << "|" << state.to_move;
      break;
    case GameKind::hex:
    case GameKind::othello: {
      os << (state.spec.kind == GameKind::hex ? "h" : "o") << state.spec.board_side << "|";
      for (int8_t c : state.cells) os << static_cast<char>('0' + c);
      os << "|" << state.to_move;
      if (state.spec.kind == GameKind::othello) os << "|" << state.pass_streak;
      break;
    }
  }
  return os.str();
}

std::string render(const GameState& state) {
  std::ostringstream os;
  switch (state.spec.kind) {
    case GameKind::countup:
      os << "count: " << state.counter << " / " << state.spec.countup_target << "\n";
      break;
    case GameKind::hex: {
      const int n = state.spec.board_side;
      os << "  ";
      for (int c = 0; c < n; ++c) os << " " << static_cast<char>('a' + c);
      os << "\n";
      for (int r = 0; r < n; ++r) {
        for (int i = 0; i < r; ++i) os << " ";
        os << (r + 1 < 10 ? " " : "") << r + 1;
        for (int c = 0; c < n; ++c) {
          const int8_t v = state.cells[static_cast<size_t>(r * n + c)];
          os << " " << (v == 0 ? '.' : v == 1 ? 'X' : 'O');
        }
        os << "\n";
      }
      os << "X (player 0) connects top-bottom, O connects left-right\n";
      break;
    }
    case GameKind::othello: {
      const int n = state.spec.board_side;
      os << " ";
      for (int c = 0; c < n; ++c) os << " " << static_cast<char>('a' + c);
      os << "\n";
      for (int r = 0; r < n; ++r) {
        os << r + 1;
        for (int c = 0; c < n; ++c) {
          const int8_t v = state.cells[static_cast<size_t>(r * n + c)];
          os << " " << (v == 0 ? '.' : v == 1 ? 'X' : 'O');
        }
        os << "\n";
      }
      break;
    }
  }
  if (state.terminal) {
    os << "game over; outcome for the last mover: " << state.outcome << "\n";
  } else {
    os << "player " << state.to_move << " to move\n";
  }
  return os.str();
}

std::string action_name(const GameSpec& spec, int action) {
  std::ostringstream os;
  switch (spec.kind) {
    case GameKind::countup:
      os << "+" << action + 1;
      break;
    case GameKind::hex:
    case GameKind::othello: {
      if (spec.kind == GameKind::othello && action == othello_pass_action(spec)) return "pass";
      const int n = spec.board_side;
      os << static_cast<char>('a' + action % n) << action / n + 1;
      break;
    }
  }
  return os.str();
}

int parse_action(const GameSpec& spec, const std::string& text) {
  std::string t;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (t.empty()) return -1;
  switch (spec.kind) {
    case GameKind::countup: {
      size_t pos = t[0] == '+' ? 1 : 0;
      try {
        const int inc = std::stoi(t.substr(pos));
        return inc - 1;
      } catch (...) {
        return -1;
      }
    }
    case GameKind::hex:
    case GameKind::othello: {
      if (spec.kind == GameKind::othello && t == "pass") return othello_pass_action(spec);
      if (t.size() < 2 || t[0] < 'a' || t[0] >= 'a' + spec.board_side) return -1;
      const int col = t[0] - 'a';
      try {
        const int row = std::stoi(t.substr(1)) - 1;
        if (row < 0 || row >= spec.board_side) return -1;
        return row * spec.board_side + col;
      } catch (...) {
        return -1;
      }
    }
  }
  return -1;
}

}  // namespace klent::games
