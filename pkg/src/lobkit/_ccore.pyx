# distutils: language = c++
# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled price-time priority book core.

Mirrors ``lobkit._pycore.BookCore`` call for call. Levels live in two
``std::map`` ladders keyed by ``sign * price`` (best level = last key); each
level owns an intrusive FIFO of nodes in a pooled vector.
"""

from cython.operator cimport dereference as deref, preincrement as inc, predecrement as dec
from libc.stdint cimport int64_t
from libcpp.map cimport map as cmap
from libcpp.unordered_map cimport unordered_map
from libcpp.utility cimport pair
from libcpp.vector cimport vector

from lobkit.errors import CancelExceedsVolume, DuplicateOrderId, UnknownOrderId

cdef struct Node:
    int64_t id
    int64_t price
    int64_t volume
    int64_t seq
    int side
    int64_t prev
    int64_t next

cdef struct Level:
    int64_t head
    int64_t tail
    int64_t volume


cdef class BookCore:
    cdef vector[Node] _nodes
    cdef vector[int64_t] _free
    cdef unordered_map[int64_t, int64_t] _index
    cdef cmap[int64_t, Level] _bids
    cdef cmap[int64_t, Level] _asks
    cdef int64_t _volume[2]
    cdef int64_t _seq

    def __cinit__(self):
        self._seq = 0
        self._volume[0] = 0
        self._volume[1] = 0

    def __len__(self):
        return self._index.size()

    def __contains__(self, order_id):
        return self._index.count(<int64_t>order_id) > 0

    cdef inline cmap[int64_t, Level]* _ladder(self, int side):
        return &self._bids if side == 0 else &self._asks

    cdef inline int64_t _sign(self, int side):
        return 1 if side == 0 else -1

    cdef object _best(self, int side):
        cdef cmap[int64_t, Level].iterator it
        if self._ladder(side).empty():
            return None
        it = self._ladder(side).end()
        dec(it)
        return deref(it).first * self._sign(side)

    def best_bid(self):
        return self._best(0)

    def best_ask(self):
        return self._best(1)

    def total_volume(self, int side):
        return self._volume[side]

    def next_seq(self):
        return self._seq

    cdef int64_t _alloc(self, int64_t oid, int side, int64_t price, int64_t volume):
        cdef int64_t idx
        cdef Node n
        n.id = oid
        n.side = side
        n.price = price
        n.volume = volume
        n.seq = self._seq
        n.prev = -1
        n.next = -1
        if self._free.empty():
            idx = self._nodes.size()
            self._nodes.push_back(n)
        else:
            idx = self._free.back()
            self._free.pop_back()
            self._nodes[idx] = n
        return idx

    cdef void _unlink(self, Level* lvl, int64_t idx):
        cdef Node* n = &self._nodes[idx]
        if n.prev >= 0:
            self._nodes[n.prev].next = n.next
        else:
            lvl.head = n.next
        if n.next >= 0:
            self._nodes[n.next].prev = n.prev
        else:
            lvl.tail = n.prev
        self._index.erase(n.id)
        self._free.push_back(idx)

    cdef int64_t _take(self, int opp, bint limited, int64_t limit, int64_t volume, list fills):
        cdef cmap[int64_t, Level]* ladder = self._ladder(opp)
        cdef cmap[int64_t, Level].iterator it
        cdef int64_t sign = self._sign(opp)
        cdef int64_t key, price, avail, idx
        cdef Level* lvl
        cdef Node* n
        while volume > 0 and not ladder.empty():
            it = ladder.end()
            dec(it)
            key = deref(it).first
            if limited and key < limit:
                break
            price = key * sign
            lvl = &deref(it).second
            while volume > 0 and lvl.head >= 0:
                idx = lvl.head
                n = &self._nodes[idx]
                avail = n.volume
                if avail <= volume:
                    fills.append((n.id, price, avail))
                    volume -= avail
                    lvl.volume -= avail
                    self._volume[opp] -= avail
                    self._unlink(lvl, idx)
                else:
                    fills.append((n.id, price, volume))
                    n.volume = avail - volume
                    lvl.volume -= volume
                    self._volume[opp] -= volume
                    volume = 0
            if lvl.head < 0:
                ladder.erase(it)
        return volume

    def add(self, int64_t order_id, int side, int64_t price, int64_t volume):
        cdef list fills = []
        cdef int opp = 1 - side
        cdef int64_t remaining, idx, key
        cdef Level fresh
        cdef Level* lvl
        cdef cmap[int64_t, Level].iterator it
        if self._index.count(order_id):
            raise DuplicateOrderId(order_id)
        remaining = self._take(opp, True, price * self._sign(opp), volume, fills)
        if remaining > 0:
            key = price * self._sign(side)
            it = self._ladder(side).find(key)
            if it == self._ladder(side).end():
                fresh.head = -1
                fresh.tail = -1
                fresh.volume = 0
                it = self._ladder(side).insert(pair[int64_t, Level](key, fresh)).first
            lvl = &deref(it).second
            idx = self._alloc(order_id, side, price, remaining)
            if lvl.tail >= 0:
                self._nodes[lvl.tail].next = idx
                self._nodes[idx].prev = lvl.tail
            else:
                lvl.head = idx
            lvl.tail = idx
            lvl.volume += remaining
            self._volume[side] += remaining
            self._index[order_id] = idx
        self._seq += 1
        return fills

    def market(self, int side, int64_t volume):
        cdef list fills = []
        self._take(1 - side, False, 0, volume, fills)
        return fills

    def cancel(self, int64_t order_id, int64_t volume=-1):
        cdef unordered_map[int64_t, int64_t].iterator found = self._index.find(order_id)
        cdef int64_t idx, resting, key
        cdef int side
        cdef Node* n
        cdef Level* lvl
        cdef cmap[int64_t, Level].iterator it
        if found == self._index.end():
            raise UnknownOrderId(order_id)
        idx = deref(found).second
        n = &self._nodes[idx]
        resting = n.volume
        side = n.side
        if volume > resting:
            raise CancelExceedsVolume(order_id, volume, resting)
        key = n.price * self._sign(side)
        it = self._ladder(side).find(key)
        lvl = &deref(it).second
        if volume < 0 or volume == resting:
            volume = resting
            lvl.volume -= volume
            self._volume[side] -= volume
            self._unlink(lvl, idx)
            if lvl.head < 0:
                self._ladder(side).erase(it)
        else:
            n.volume = resting - volume
            lvl.volume -= volume
            self._volume[side] -= volume
        return volume

    def order(self, int64_t order_id):
        cdef unordered_map[int64_t, int64_t].iterator found = self._index.find(order_id)
        cdef Node* n
        if found == self._index.end():
            raise UnknownOrderId(order_id)
        n = &self._nodes[deref(found).second]
        return (n.side, n.price, n.volume, n.seq)

    def depth(self, int side):
        cdef list out = []
        cdef int64_t sign = self._sign(side)
        cdef cmap[int64_t, Level].iterator it = self._ladder(side).end()
        cdef cmap[int64_t, Level].iterator first = self._ladder(side).begin()
        while it != first:
            dec(it)
            out.append((deref(it).first * sign, deref(it).second.volume))
        return out

    def level_volume(self, int side, int64_t price):
        cdef cmap[int64_t, Level].iterator it = self._ladder(side).find(price * self._sign(side))
        if it == self._ladder(side).end():
            return 0
        return deref(it).second.volume

    def levels(self, int side):
        cdef list out = []
        cdef list queue
        cdef int64_t sign = self._sign(side)
        cdef int64_t idx
        cdef cmap[int64_t, Level].iterator it = self._ladder(side).end()
        cdef cmap[int64_t, Level].iterator first = self._ladder(side).begin()
        while it != first:
            dec(it)
            queue = []
            idx = deref(it).second.head
            while idx >= 0:
                queue.append((self._nodes[idx].id, self._nodes[idx].volume, self._nodes[idx].seq))
                idx = self._nodes[idx].next
            out.append((deref(it).first * sign, queue))
        return out
