"""Plateau learning-rate decay and early stopping.

Both track the best validation accuracy seen so far (strictly-greater
comparison, zero minimum delta). A wait counter increments on each
non-improving epoch and an event fires when it reaches the patience, i.e.
at epoch ``last_improvement + patience``; the plateau event halves the
learning rate for subsequent epochs and resets its counter, the stop
event ends training (the loop then restores the best epoch's weights).
"""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class PlateauScheduler:
    lr: float
    factor: float = 0.5
    patience: int = 20
    best: float = float("-inf")
    wait: int = 0
    halvings: int = 0

    def update(self, val_acc: float) -> float:
        """Record an epoch result; returns the lr for the next epoch."""
        if val_acc > self.best:
            self.best = val_acc
            self.wait = 0
        else:
            self.wait += 1
            if self.wait >= self.patience:
                self.lr *= self.factor
                self.halvings += 1
                self.wait = 0
        return self.lr


@dataclass
class EarlyStopper:
    patience: int = 50
    best: float = float("-inf")
    best_epoch: int = 0
    wait: int = 0
    _epoch: int = 0

    def update(self, val_acc: float) -> bool:
        """Record an epoch result; True means stop now."""
        self._epoch += 1
        if val_acc > self.best:
            self.best = val_acc
            self.best_epoch = self._epoch
            self.wait = 0
            return False
        self.wait += 1
        return self.wait >= self.patience


def simulate_schedule(accuracies: list[float], lr_init: float = 1e-3,
                      factor: float = 0.5, plateau_patience: int = 20,
                      stop_patience: int = 50) -> dict:
    """Reference trace for a whole run: per-epoch lr, halving epochs, stop epoch."""
    sched = PlateauScheduler(lr_init, factor, plateau_patience)
    stopper = EarlyStopper(stop_patience)
    lrs: list[float] = []
    halving_epochs: list[int] = []
    stop_epoch = None
    lr = lr_init
    for epoch, acc in enumerate(accuracies, start=1):
        lrs.append(lr)
        before = sched.halvings
        lr = sched.update(acc)
        if sched.halvings > before:
            halving_epochs.append(epoch)
        if stopper.update(acc):
            stop_epoch = epoch
            break
    return {"lrs": lrs, "halvings": halving_epochs, "stop_epoch": stop_epoch,
            "best_epoch": stopper.best_epoch}
