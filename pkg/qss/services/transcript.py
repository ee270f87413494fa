"""
QSS Collusion Lab - Transcript Service
Classical message log with a public broadcast channel and the colluders'
covert side-channel
"""
import logging
from typing import Any, Dict, List, Optional, Tuple

from qss.exceptions import ProtocolStateError
from qss.models.protocol import PartyId
from qss.schemas.report import Channel, MessageLogEntry

logger = logging.getLogger(__name__)


class Transcript:
    """
    Every classical value a party uses is read from here.

    Reading a topic that has not been published raises ProtocolStateError,
    so a party can never act on information it has not received. Covert
    entries are readable only by their two endpoints.
    """

    def __init__(self):
        self._entries: List[MessageLogEntry] = []
        self._by_topic: Dict[Tuple[Channel, str], MessageLogEntry] = {}
        self.reads: List[Tuple[PartyId, Channel, str]] = []

    def publish(
        self,
        sender: PartyId,
        topic: str,
        value: Any = None,
        receiver: Optional[PartyId] = None
    ) -> MessageLogEntry:
        """Authenticated public message (broadcast when receiver is None)."""
        return self._append("public", sender, receiver, topic, value)

    def covert(self, sender: PartyId, receiver: PartyId, topic: str, value: Any = None) -> MessageLogEntry:
        """Side-channel message between colluders, invisible to honest parties."""
        return self._append("covert", sender, receiver, topic, value)

    def has(self, topic: str, channel: Channel = "public") -> bool:
        return (channel, topic) in self._by_topic

    def read(self, reader: PartyId, topic: str, channel: Channel = "public") -> Any:
        entry = self._by_topic.get((channel, topic))
        if entry is None:
            raise ProtocolStateError(f"{reader.value} read '{topic}' before it was sent")
        if channel == "covert" and reader not in (entry.sender, entry.receiver):
            raise ProtocolStateError(f"{reader.value} cannot read covert message '{topic}'")
        if entry.receiver is not None and reader not in (entry.sender, entry.receiver):
            raise ProtocolStateError(f"'{topic}' was addressed to {entry.receiver.value}, not {reader.value}")
        self.reads.append((reader, channel, topic))
        return entry.value

    @property
    def public(self) -> List[MessageLogEntry]:
        return [e for e in self._entries if e.channel == "public"]

    @property
    def covert_entries(self) -> List[MessageLogEntry]:
        return [e for e in self._entries if e.channel == "covert"]

    def _append(
        self,
        channel: Channel,
        sender: PartyId,
        receiver: Optional[PartyId],
        topic: str,
        value: Any
    ) -> MessageLogEntry:
        if (channel, topic) in self._by_topic:
            raise ProtocolStateError(f"'{topic}' was already sent on the {channel} channel")
        entry = MessageLogEntry(
            seq=len(self._entries),
            channel=channel,
            sender=sender,
            receiver=receiver,
            topic=topic,
            value=value,
        )
        self._entries.append(entry)
        self._by_topic[(channel, topic)] = entry
        target = receiver.value if receiver else "all"
        logger.debug(f"[{channel}] {sender.value} -> {target}: {topic}")
        return entry
