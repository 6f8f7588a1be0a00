from pilotwave.storage.filestorage import FileStorage
from pilotwave.storage.storage import Storage
